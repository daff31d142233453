//! RFC 4180 row writer. Cells containing commas, quotes, line breaks or
//! braces are quoted.

pub fn needs_quotes(cell: &str) -> bool {
    cell.contains([',', '"', '\r', '\n', '{', '}'])
}

pub fn push_cell(out: &mut String, cell: &str) {
    if needs_quotes(cell) {
        out.push('"');
        out.push_str(&cell.replace('"', "\"\""));
        out.push('"');
    } else {
        out.push_str(cell);
    }
}

pub fn push_row<S: AsRef<str>>(out: &mut String, cells: &[S]) {
    for (i, c) in cells.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        push_cell(out, c.as_ref());
    }
    out.push_str("\r\n");
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quoting() {
        let mut s = String::new();
        push_row(&mut s, &["a", "{x y}", "q\"t", "", "1,2"]);
        assert_eq!(s, "a,\"{x y}\",\"q\"\"t\",,\"1,2\"\r\n");
    }
}
