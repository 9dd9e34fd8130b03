use lcm_dilation::gns::{minimal_dilation, DilationOptions};
use lcm_dilation::linalg::{eye, op_norm, singular_values, CMat};
use lcm_dilation::regularity::{is_star_regular, z_operator, Family};
use lcm_dilation::sample::{FamilyKind, Sampler};
use lcm_dilation::verify::{verify_model, CheckEntry, VerificationReport};
use lcm_dilation::{Element, MonoidSpec, Representation};
use proptest::prelude::*;

const TOL: f64 = 1e-8;

fn specs() -> Vec<MonoidSpec> {
    ["NA(2)", "F(2)", "X(NA(1),F(2))", "*(NA(2),F(1))"].iter().map(|s| s.parse().unwrap()).collect()
}

fn random_rep(spec: &MonoidSpec, seed: u64, dim: usize) -> Representation {
    Sampler::new(seed).representation(spec, dim, FamilyKind::Polynomial, (0.2, 1.0)).unwrap()
}

/// Product of generator matrices along a word, written out without `evaluate`.
fn word_product(rep: &Representation, word: &[usize]) -> CMat {
    word.iter().fold(eye(rep.dim), |acc, &g| acc * &rep.generators[g])
}

fn nontrivial(spec: &MonoidSpec, radius: usize) -> Vec<Element> {
    spec.ball(radius).into_iter().filter(|x| !spec.is_identity(x)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn evaluate_is_a_contractive_homomorphism(
        spec in prop::sample::select(specs()),
        seed in any::<u64>(),
        dim in 1usize..=3,
        picks in prop::collection::vec(any::<prop::sample::Index>(), 2),
    ) {
        let rep = random_rep(&spec, seed, dim);
        let ball = spec.ball(3);
        let (a, b) = (picks[0].get(&ball), picks[1].get(&ball));
        let ab = spec.multiply(a, b).unwrap();
        let lhs = rep.evaluate(&ab);
        prop_assert!(op_norm(&(&lhs - rep.evaluate(a) * rep.evaluate(b))) <= 10.0 * TOL);
        prop_assert!(op_norm(&lhs) <= 1.0 + spec.degree(&ab) as f64 * TOL);
        // the normal form may reorder commuting letters; the raw word product must agree
        let mut w = spec.word(a);
        w.extend(spec.word(b));
        prop_assert!(op_norm(&(lhs - word_product(&rep, &w))) <= 10.0 * TOL);
    }

    #[test]
    fn z_is_self_adjoint(
        spec in prop::sample::select(specs()),
        seed in any::<u64>(),
        dim in 1usize..=3,
        picks in prop::collection::vec(any::<prop::sample::Index>(), 1..=3),
    ) {
        let rep = random_rep(&spec, seed, dim);
        let pts = nontrivial(&spec, 2);
        let mut f: Vec<Element> = picks.iter().map(|i| i.get(&pts).clone()).collect();
        f.dedup();
        let z = z_operator(&rep, &f).unwrap();
        prop_assert!(op_norm(&(&z - z.adjoint())) <= TOL);
    }

    #[test]
    fn zero_rep_gives_identity(
        spec in prop::sample::select(specs()),
        dim in 1usize..=3,
        picks in prop::collection::vec(any::<prop::sample::Index>(), 1..=3),
    ) {
        let rep = Representation::zero(spec.clone(), dim);
        let pts = nontrivial(&spec, 3);
        let f: Vec<Element> = picks.iter().map(|i| i.get(&pts).clone()).collect();
        prop_assert!(op_norm(&(z_operator(&rep, &f).unwrap() - eye(dim))) == 0.0);
    }

    #[test]
    fn singleton_z_closed_form(
        spec in prop::sample::select(specs()),
        seed in any::<u64>(),
        dim in 1usize..=3,
        pick in any::<prop::sample::Index>(),
    ) {
        let rep = random_rep(&spec, seed, dim);
        let pts = nontrivial(&spec, 3);
        let p = pick.get(&pts);
        let t = word_product(&rep, &spec.word(p));
        let want = eye(dim) - &t * t.adjoint();
        prop_assert!(op_norm(&(z_operator(&rep, std::slice::from_ref(p)).unwrap() - want)) <= 1e-13);
    }

    /// Two commuting generators: `Z_{a,b} = I − AA* − BB* + (AB)(AB)*`.
    /// Two free generators: the pair term is absent.
    #[test]
    fn pair_z_closed_form(seed in any::<u64>(), dim in 1usize..=3) {
        for (name, joint) in [("NA(2)", true), ("F(2)", false)] {
            let spec: MonoidSpec = name.parse().unwrap();
            let rep = random_rep(&spec, seed, dim);
            let (a, b) = (&rep.generators[0], &rep.generators[1]);
            let mut want = eye(dim) - a * a.adjoint() - b * b.adjoint();
            if joint {
                let ab = a * b;
                want += &ab * ab.adjoint();
            }
            let z = z_operator(&rep, &spec.generators()).unwrap();
            prop_assert!(op_norm(&(z - want)) <= 1e-13);
        }
    }

    #[test]
    fn report_overall_is_conjunction(
        entries in prop::collection::vec((0.0f64..2e-8, 0usize..5, any::<bool>()), 0..8),
    ) {
        let checks: Vec<CheckEntry> = entries
            .iter()
            .enumerate()
            .map(|(i, &(r, d, deg))| {
                let mut c = CheckEntry::new(format!("c{i}"), r, d, TOL);
                c.degraded = deg;
                if deg { c.pass = false; }
                c
            })
            .collect();
        let want = checks.iter().all(|c| c.pass && !c.degraded);
        let report = VerificationReport::new(checks, TOL);
        prop_assert_eq!(report.overall, want);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// GNS models of random regular representations satisfy every identity
    /// up to one degree below the truncation.
    #[test]
    fn gns_model_identities(
        spec in prop::sample::select(vec!["NA(1)", "NA(2)", "F(2)"]),
        seed in any::<u64>(),
        dim in 1usize..=2,
    ) {
        let spec: MonoidSpec = spec.parse().unwrap();
        let rep = Sampler::new(seed).representation(&spec, dim, FamilyKind::Diagonal, (0.1, 0.6)).unwrap();
        prop_assume!(is_star_regular(&rep, Family::Generators, TOL).unwrap().passed);
        let radius = 4;
        let (gns, model) = minimal_dilation(&rep, radius, DilationOptions::default()).unwrap();
        let report = verify_model(&model, &rep, radius - 2, TOL).unwrap();
        prop_assert!(report.overall, "{}", report);

        // dilation equality against directly multiplied generators, over the whole ball
        let h = &model.h_embed;
        for p in spec.ball(radius) {
            let t = word_product(&rep, &spec.word(&p));
            prop_assert!(op_norm(&(h.ad_mul(&model.act(&p, h)) - t)) <= TOL);
        }
        // minimality: the frame vectors span the model space
        prop_assert_eq!(gns.factor.nrows(), model.space_dim);
        let s = singular_values(&gns.factor);
        prop_assert!(s.iter().filter(|&&x| x > 1e-7).count() == model.space_dim);
    }
}
