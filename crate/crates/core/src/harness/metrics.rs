use std::collections::HashMap;

use crate::{Error, Result};

/// Lowercase, drop punctuation and the articles `a`/`an`/`the`, collapse
/// whitespace.
pub fn squad_normalize(text: &str) -> String {
    let lowered: String = text
        .to_lowercase()
        .chars()
        .filter(|c| !c.is_ascii_punctuation())
        .collect();
    lowered
        .split_whitespace()
        .filter(|w| !matches!(*w, "a" | "an" | "the"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn check_golds<S: AsRef<str>>(golds: &[S]) -> Result<()> {
    if golds.is_empty() {
        return Err(Error::Contract("no gold answers".into()));
    }
    Ok(())
}

/// 1.0 when the normalized prediction equals any normalized gold answer.
pub fn squad_em<S: AsRef<str>>(pred: &str, golds: &[S]) -> Result<f64> {
    check_golds(golds)?;
    let p = squad_normalize(pred);
    Ok(if golds.iter().any(|g| squad_normalize(g.as_ref()) == p) { 1.0 } else { 0.0 })
}

/// Token-bag F1 of two whitespace-tokenized strings, without normalization.
pub fn token_bag_f1(pred: &str, gold: &str) -> f64 {
    let p: Vec<&str> = pred.split_whitespace().collect();
    let g: Vec<&str> = gold.split_whitespace().collect();
    if p.is_empty() || g.is_empty() {
        return if p.is_empty() && g.is_empty() { 1.0 } else { 0.0 };
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in &g {
        *counts.entry(t).or_default() += 1;
    }
    let mut overlap = 0;
    for t in &p {
        if let Some(c) = counts.get_mut(t) {
            if *c > 0 {
                *c -= 1;
                overlap += 1;
            }
        }
    }
    if overlap == 0 {
        return 0.0;
    }
    let precision = overlap as f64 / p.len() as f64;
    let recall = overlap as f64 / g.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Best token-bag F1 against any gold answer.
pub fn squad_f1<S: AsRef<str>>(pred: &str, golds: &[S]) -> Result<f64> {
    check_golds(golds)?;
    let p = squad_normalize(pred);
    Ok(golds
        .iter()
        .map(|g| token_bag_f1(&p, &squad_normalize(g.as_ref())))
        .fold(0.0, f64::max))
}

/// Mean EM and F1 of `predictions` (id to answer) against `golds` (id to
/// answers). Missing predictions count as empty strings.
pub fn score_predictions(predictions: &HashMap<String, String>, golds: &[(String, Vec<String>)]) -> Result<(f64, f64)> {
    if golds.is_empty() {
        return Err(Error::Data("no questions to score".into()));
    }
    let (mut em, mut f1) = (0.0, 0.0);
    for (id, answers) in golds {
        let pred = predictions.get(id).map(String::as_str).unwrap_or("");
        em += squad_em(pred, answers)?;
        f1 += squad_f1(pred, answers)?;
    }
    let n = golds.len() as f64;
    Ok((em / n, f1 / n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_examples() {
        assert_eq!(squad_normalize("The Cat."), "cat");
        assert_eq!(squad_normalize("a an the"), "");
        assert_eq!(squad_normalize("1999"), "1999");
        assert_eq!(squad_normalize("  Theatre,  an  ox "), "theatre ox");
    }

    #[test]
    fn metric_examples() {
        assert_eq!(squad_em("the cat", &["cat"]).unwrap(), 1.0);
        assert_eq!(squad_f1("the cat", &["cat"]).unwrap(), 1.0);
        assert!((token_bag_f1("a b c", "b c d") - 2.0 / 3.0).abs() < 1e-9);
        // "a" is an article, so normalization leaves "b c" against "b c d".
        assert!((squad_f1("a b c", &["b c d"]).unwrap() - 0.8).abs() < 1e-9);
        assert!((squad_f1("x b c", &["b c d"]).unwrap() - 2.0 / 3.0).abs() < 1e-9);
        assert_eq!(squad_em("x y", &["z"]).unwrap(), 0.0);
        assert_eq!(squad_f1("x y", &["z"]).unwrap(), 0.0);
        assert_eq!(squad_f1("the", &["a"]).unwrap(), 1.0);
        assert_eq!(squad_f1("b", &["z", "b"]).unwrap(), 1.0);
    }

    #[test]
    fn empty_golds_rejected() {
        let none: [&str; 0] = [];
        assert!(matches!(squad_em("x", &none), Err(Error::Contract(_))));
        assert!(matches!(squad_f1("x", &none), Err(Error::Contract(_))));
    }
}
