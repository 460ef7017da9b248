//! Static SVG rendering of one level of a map document.

use std::fmt::Write;

use thiserror::Error;

use crate::geometry::Rect;
use crate::io::MapDocument;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SvgError {
    #[error("level {level} is outside 1..={level_count}")]
    BadLevel { level: usize, level_count: usize },
}

const MARGIN: f64 = 10.0;

/// Edge stroke width: 4 on the top level down to 1 on the bottom one.
pub fn stroke_width(level: usize, level_count: usize) -> f64 {
    if level_count <= 1 {
        return 1.0;
    }
    1.0 + 3.0 * (level_count - level) as f64 / (level_count - 1) as f64
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Renders the nodes and edges with level `<= level`. The y axis is flipped
/// so layout "up" is up on screen; coordinates are printed with two decimals.
pub fn export_svg(doc: &MapDocument, level: usize) -> Result<String, SvgError> {
    let h = doc.meta.level_count;
    if level == 0 || level > h {
        return Err(SvgError::BadLevel { level, level_count: h });
    }
    let (nodes, edges) = doc.filter_level(level);
    let pos: std::collections::HashMap<u64, (f64, f64)> = nodes.iter().map(|n| (n.id, (n.x, -n.y))).collect();

    let mut bounds = Rect::EMPTY;
    for n in &nodes {
        bounds = bounds.union(&Rect::centered(crate::model::Point::new(n.x, -n.y), n.label_w, n.label_h));
    }
    let bounds = bounds.expand(MARGIN, MARGIN);

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{:.2} {:.2} {:.2} {:.2}" width="{:.2}" height="{:.2}">"#,
        bounds.x_min,
        bounds.y_min,
        bounds.width(),
        bounds.height(),
        bounds.width(),
        bounds.height()
    )
    .unwrap();
    writeln!(s, r##"<g stroke="#555" stroke-linecap="round">"##).unwrap();
    for e in &edges {
        let (a, b) = (pos[&e.source], pos[&e.target]);
        writeln!(
            s,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke-width="{:.2}"/>"#,
            a.0,
            a.1,
            b.0,
            b.1,
            stroke_width(e.level, h)
        )
        .unwrap();
    }
    writeln!(s, "</g>").unwrap();
    writeln!(s, r#"<g font-family="sans-serif" text-anchor="middle" dominant-baseline="central">"#).unwrap();
    for n in &nodes {
        let (x, y) = pos[&n.id];
        writeln!(
            s,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#fff" stroke="#999"/>"##,
            x - n.label_w / 2.0,
            y - n.label_h / 2.0,
            n.label_w,
            n.label_h
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="{:.2}">{}</text>"#,
            x,
            y,
            n.label_h / 1.2,
            escape(&n.label)
        )
        .unwrap();
    }
    writeln!(s, "</g>").unwrap();
    s.push_str("</svg>\n");
    Ok(s)
}
