//! Exact match and character-level F1 between recognized and target text.
//!
//!     cargo run --example text_metrics -- PREDICTED TARGET

use logodiffuser::metrics::{char_f1, exact_match};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let pairs = match args.as_slice() {
        [p, t] => vec![(p.clone(), t.clone())],
        _ => [("lgo", "logo"), ("LOGO", "LOGO"), ("silent", "listen"), ("", "star")]
            .iter()
            .map(|(p, t)| (p.to_string(), t.to_string()))
            .collect(),
    };
    for (p, t) in pairs {
        let r = char_f1(&p, &t);
        println!(
            "{p:>8} vs {t:<8} exact={} P={:.4} R={:.4} F1={:.4}",
            exact_match(&p, &t),
            r.precision,
            r.recall,
            r.f1
        );
    }
}
