//! Rewrites the vendored generator outputs in `data/`.
use abaclab::datasets::Generator;

fn main() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    for g in Generator::ALL {
        let p = g.generate(&g.default_config());
        let text = abaclab::serialize_policy(&p);
        std::fs::write(dir.join(format!("{}.abac", g.name())), text).unwrap();
        println!("{g}: {:?}", abaclab::statistics(&p).as_tuple());
    }
}
