use super::{Graph, TwoColouring};
use crate::error::{Error, Result};

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_usize(tok: Option<&str>, line: usize, what: &str) -> Result<usize> {
    let t = tok.ok_or_else(|| perr(line, format!("missing {what}")))?;
    t.parse()
        .map_err(|_| perr(line, format!("{what} is not a non-negative integer: {t:?}")))
}

/// Parse `p <n> <m>` followed by `m` lines `e <u> <v>`. Blank lines and
/// lines starting with `#` are ignored.
pub fn parse_graph(text: &str) -> Result<Graph> {
    parse_body(text.lines().enumerate().map(|(i, l)| (i + 1, l)), false)
}

fn parse_body<'a>(lines: impl Iterator<Item = (usize, &'a str)>, colouring: bool) -> Result<Graph> {
    let mut header: Option<(usize, usize, usize)> = None;
    let mut edges = Vec::new();
    let mut seen_c = !colouring;
    let mut last = 0;
    for (no, raw) in lines {
        last = no;
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let mut it = l.split_whitespace();
        match it.next() {
            Some("c") if colouring && !seen_c && header.is_none() => {
                if it.next() != Some("red") || it.next().is_some() {
                    return Err(perr(no, "expected header `c red`"));
                }
                seen_c = true;
                continue;
            }
            Some("p") => {
                if !seen_c {
                    return Err(perr(no, "colouring must start with `c red`"));
                }
                if header.is_some() {
                    return Err(perr(no, "duplicate `p` line"));
                }
                let n = parse_usize(it.next(), no, "vertex count")?;
                let m = parse_usize(it.next(), no, "edge count")?;
                header = Some((n, m, no));
            }
            Some("e") => {
                let (n, _, _) = header.ok_or_else(|| perr(no, "edge before `p` line"))?;
                let u = parse_usize(it.next(), no, "endpoint")?;
                let v = parse_usize(it.next(), no, "endpoint")?;
                if u >= n || v >= n {
                    return Err(perr(no, format!("endpoint outside 0..{n}")));
                }
                if u == v {
                    return Err(perr(no, format!("self-loop at {u}")));
                }
                edges.push((u, v));
            }
            Some(t) => return Err(perr(no, format!("unknown line type {t:?}"))),
            None => {}
        }
        if it.next().is_some() {
            return Err(perr(no, "trailing tokens"));
        }
    }
    let (n, m, hline) = header.ok_or_else(|| perr(last.max(1), "missing `p` line"))?;
    if edges.len() != m {
        return Err(perr(
            hline,
            format!("header declares {m} edges, found {}", edges.len()),
        ));
    }
    let g = Graph::from_edges(n, &edges)?;
    if g.edge_count() != m {
        return Err(perr(hline, "duplicate edges"));
    }
    Ok(g)
}

pub fn write_graph(g: &Graph) -> String {
    let mut s = format!("p {} {}\n", g.n(), g.edge_count());
    for (u, v) in g.edges() {
        s.push_str(&format!("e {u} {v}\n"));
    }
    s
}

/// Same as the graph format for the red edges, preceded by `c red`.
pub fn parse_colouring(text: &str) -> Result<TwoColouring> {
    let g = parse_body(text.lines().enumerate().map(|(i, l)| (i + 1, l)), true)?;
    Ok(TwoColouring::from_red(g))
}

pub fn write_colouring(c: &TwoColouring) -> String {
    format!("c red\n{}", write_graph(c.red()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let g = Graph::cycle(6);
        assert_eq!(parse_graph(&write_graph(&g)).unwrap(), g);
        let c = TwoColouring::from_red(Graph::path(4));
        assert_eq!(parse_colouring(&write_colouring(&c)).unwrap(), c);
    }

    #[test]
    fn errors_carry_lines() {
        let e = parse_graph("p 3 1\ne 0 5\n").unwrap_err();
        assert_eq!(e, Error::Parse { line: 2, msg: "endpoint outside 0..3".into() });
        assert!(matches!(parse_graph("p 3 2\ne 0 1\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_colouring("p 2 0\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_graph("x\n"), Err(Error::Parse { line: 1, .. })));
    }
}
