//! Builds a CVSS vector catalog from observed frequencies and renders one
//! comparison the way an expert would see it.

use elicit::catalogs::{frequency_ranked, parse_cvss_vector, render_hints, top_covering, Catalog, CvssVector};

fn main() -> anyhow::Result<()> {
    println!("{} legal vectors", CvssVector::enumerate().len());

    let observed = "\
vector,count
CVSS:3.1/AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H,120
AV:N/AC:L/PR:N/UI:R/S:U/C:L/I:L/A:N,60
AV:L/AC:L/PR:L/UI:N/S:U/C:H/I:H/A:H,15
AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H,30
AV:P/AC:H/PR:H/UI:R/S:U/C:L/I:N/A:N,2
";
    let ranked = frequency_ranked(observed)?;
    for r in &ranked {
        println!("{:>4} {:.3} {}", r.count, r.cumulative, r.vector);
    }
    let top = top_covering(&ranked, 0.9);
    let vectors: Vec<CvssVector> = top.iter().map(|r| r.vector).collect();
    let catalog = Catalog::cvss(&vectors)?;
    println!("catalog of {} covers 90%", catalog.elements.len());

    let left = parse_cvss_vector("AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H")?;
    let right = parse_cvss_vector("AV:L/AC:L/PR:L/UI:N/S:U/C:H/I:H/A:H")?;
    for h in render_hints(&left, &right) {
        let mark = if h.shared { " " } else { "*" };
        println!("{mark} {:<3} {:<2} {}", h.metric, h.left, h.right);
    }
    Ok(())
}
