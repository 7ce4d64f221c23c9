use proptest::prelude::*;

use psychoprobe_core::parser::{classify_validity, extract_ratings, ParsedResponse};
use psychoprobe_core::questionnaire::{Factor, QuestionnaireBank};
use psychoprobe_core::scoring::{reverse_recode, score_case, score_pair};
use psychoprobe_core::stats::anova::anova_oneway;
use psychoprobe_core::stats::correlation::pearson;
use psychoprobe_core::stats::ols::ols_dummy;
use uuid::Uuid;

fn ratings() -> impl Strategy<Value = [i32; 10]> {
    prop::array::uniform10(1..=7i32)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn parser_never_panics(text in "\\PC{0,400}") {
        let bank = QuestionnaireBank::english();
        let parsed = extract_ratings(&text, &bank);
        let _ = classify_validity(&parsed);
    }

    #[test]
    fn parser_never_panics_on_numbered_noise(lines in prop::collection::vec(("[0-9]{1,2}", "[.):-]?", " ?[0-9]{0,2}", "[ a-zA-Z,.!-]{0,30}"), 0..14)) {
        let bank = QuestionnaireBank::english();
        let text: String = lines.iter().map(|(a, b, c, d)| format!("{a}{b}{c}{d}\n")).collect();
        let _ = classify_validity(&extract_ratings(&text, &bank));
    }

    #[test]
    fn canonical_layout_round_trips(r in ratings()) {
        let bank = QuestionnaireBank::english();
        let resp = ParsedResponse::from_ratings(r);
        let back = extract_ratings(&resp.to_canonical(), &bank);
        prop_assert_eq!(back.ratings, resp.ratings);
    }

    #[test]
    fn scores_stay_on_the_lattice(r in ratings()) {
        let bank = QuestionnaireBank::english();
        let c = score_case(&ParsedResponse::from_ratings(r), &bank, "en", Uuid::nil()).unwrap();
        for f in Factor::ALL {
            let s = c.score(f);
            prop_assert!((1.0..=7.0).contains(&s));
            prop_assert_eq!((2.0 * s).fract(), 0.0);
            prop_assert!(c.distance(f) <= 6);
        }
    }

    #[test]
    fn recoding_is_symmetric(a in 1..=7i32, b in 1..=7i32) {
        prop_assert_eq!(reverse_recode(reverse_recode(a).unwrap()).unwrap(), a);
        let (s, d) = score_pair(a, b).unwrap();
        let (s2, d2) = score_pair(reverse_recode(a).unwrap(), reverse_recode(b).unwrap()).unwrap();
        prop_assert_eq!(s + s2, 8.0);
        prop_assert_eq!(d, d2);
    }

    #[test]
    fn two_group_f_equals_squared_t(
        a in prop::collection::vec(1.0f64..7.0, 3..40),
        b in prop::collection::vec(1.0f64..7.0, 3..40),
    ) {
        let mut values = a.clone();
        values.extend(&b);
        let labels: Vec<&str> = a.iter().map(|_| "en").chain(b.iter().map(|_| "es")).collect();
        let anova = anova_oneway(&values, &labels).unwrap();
        let ols = ols_dummy(&values, &labels, "en").unwrap();
        let t = ols.term("es").unwrap().t;
        prop_assert!((anova.f - t * t).abs() <= 1e-9 * anova.f.max(1.0));
        prop_assert!(anova.omega_sq <= anova.eta_sq);
        prop_assert!(anova.omega_sq_raw <= anova.eta_sq);
    }

    #[test]
    fn pearson_is_affine_invariant(
        xy in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 3..50),
        scale in 0.1f64..10.0,
        shift in -5.0f64..5.0,
    ) {
        let x: Vec<f64> = xy.iter().map(|p| p.0).collect();
        let y: Vec<f64> = xy.iter().map(|p| p.1).collect();
        if let Some(r) = pearson(&x, &y) {
            let x2: Vec<f64> = x.iter().map(|v| scale * v + shift).collect();
            let r2 = pearson(&x2, &y).unwrap();
            prop_assert!((r - r2).abs() < 1e-9);
            let neg: Vec<f64> = x.iter().map(|v| -v).collect();
            prop_assert!((pearson(&neg, &y).unwrap() + r).abs() < 1e-9);
        }
    }
}
