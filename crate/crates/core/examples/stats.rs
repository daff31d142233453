fn main() {
    for path in std::env::args().skip(1) {
        let text = std::fs::read_to_string(&path).unwrap();
        let p = abaclab::parse_policy(&text, &path).unwrap();
        println!("{path}: {:?}", abaclab::statistics(&p).as_tuple());
        for c in abaclab::analytics::rule_coverage(&p) {
            print!("{}:{} ", c.rule_index, c.granted_count);
        }
        println!();
    }
}
