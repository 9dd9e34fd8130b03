use lcm_dilation::{Element, MonoidSpec};
use proptest::prelude::*;

fn specs() -> Vec<MonoidSpec> {
    ["NA(3)", "F(2)", "X(NA(2),F(2))", "*(NA(2),F(1))", "X(F(2),*(NA(1),F(1)))"]
        .iter()
        .map(|s| s.parse().unwrap())
        .collect()
}

/// A spec together with three random words of length ≤ 3 over its generators.
fn spec_and_words() -> impl Strategy<Value = (MonoidSpec, [Vec<usize>; 3])> {
    prop::sample::select(specs()).prop_flat_map(|spec| {
        let w = || prop::collection::vec(0..spec.rank(), 0..=3);
        (Just(spec.clone()), [w(), w(), w()])
    })
}

fn el(spec: &MonoidSpec, w: &[usize]) -> Element {
    spec.from_word(w).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn multiplication_is_word_concatenation((spec, [a, b, c]) in spec_and_words()) {
        let (x, y, z) = (el(&spec, &a), el(&spec, &b), el(&spec, &c));
        let xy = spec.multiply(&x, &y).unwrap();
        let joined: Vec<usize> = a.iter().chain(&b).copied().collect();
        prop_assert_eq!(&xy, &el(&spec, &joined));
        prop_assert_eq!(spec.degree(&xy), a.len() + b.len());
        let left = spec.multiply(&xy, &z).unwrap();
        let right = spec.multiply(&x, &spec.multiply(&y, &z).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn left_divide_inverts_multiply((spec, [a, b, _]) in spec_and_words()) {
        let (p, s) = (el(&spec, &a), el(&spec, &b));
        let ps = spec.multiply(&p, &s).unwrap();
        prop_assert_eq!(spec.left_divide(&p, &ps).unwrap(), Some(s));
    }

    #[test]
    fn lcm_is_symmetric_idempotent_and_a_common_multiple((spec, [a, b, _]) in spec_and_words()) {
        let (p, q) = (el(&spec, &a), el(&spec, &b));
        let r = spec.right_lcm(&p, &q).unwrap();
        prop_assert_eq!(&r, &spec.right_lcm(&q, &p).unwrap());
        prop_assert_eq!(spec.right_lcm(&p, &p).unwrap(), Some(p.clone()));
        if let Some(r) = r {
            prop_assert!(spec.left_divide(&p, &r).unwrap().is_some());
            prop_assert!(spec.left_divide(&q, &r).unwrap().is_some());
            prop_assert!(spec.degree(&r) >= spec.degree(&p).max(spec.degree(&q)));
        }
    }

    #[test]
    fn lcm_of_set_ignores_order((spec, [a, b, c]) in spec_and_words()) {
        let xs = [el(&spec, &a), el(&spec, &b), el(&spec, &c)];
        let want = spec.lcm_of_set(&xs).unwrap();
        for perm in [[0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
            let ys: Vec<Element> = perm.iter().map(|&i| xs[i].clone()).collect();
            prop_assert_eq!(&spec.lcm_of_set(&ys).unwrap(), &want);
        }
    }

    #[test]
    fn format_parse_roundtrip((spec, [a, _, _]) in spec_and_words()) {
        let x = el(&spec, &a);
        prop_assert_eq!(spec.parse_element(&spec.format_element(&x)).unwrap(), x);
    }
}

/// Brute force for the free abelian case: exponent vectors and coordinatewise max.
#[test]
fn na3_lcm_is_coordinatewise_max() {
    let spec: MonoidSpec = "NA(3)".parse().unwrap();
    let exps = |x: &Element| {
        let mut e = [0usize; 3];
        for g in spec.word(x) {
            e[g] += 1;
        }
        e
    };
    let ball = spec.ball(3);
    for p in &ball {
        for q in &ball {
            let r = spec.right_lcm(p, q).unwrap().expect("NA(k) is lattice ordered");
            let (ep, eq, er) = (exps(p), exps(q), exps(&r));
            for i in 0..3 {
                assert_eq!(er[i], ep[i].max(eq[i]));
            }
        }
    }
}

/// Free monoid oracle: one word must be a prefix of the other.
#[test]
fn free_lcm_is_longer_prefix() {
    let spec: MonoidSpec = "F(2)".parse().unwrap();
    let ball = spec.ball(4);
    for p in &ball {
        for q in &ball {
            let (wp, wq) = (spec.word(p), spec.word(q));
            let want = if wq.starts_with(&wp) {
                Some(q.clone())
            } else if wp.starts_with(&wq) {
                Some(p.clone())
            } else {
                None
            };
            assert_eq!(spec.right_lcm(p, q).unwrap(), want);
        }
    }
}

#[test]
fn ball_sizes_match_counting_formulas() {
    // NA(k): C(L+k, k); F(k): (k^{L+1} - 1)/(k - 1)
    let binom = |n: usize, k: usize| (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1));
    for l in 0..=5 {
        assert_eq!("NA(3)".parse::<MonoidSpec>().unwrap().ball(l).len(), binom(l + 3, 3));
        assert_eq!("F(2)".parse::<MonoidSpec>().unwrap().ball(l).len(), (1 << (l + 1)) - 1);
    }
    // the Cartesian product ball is the degree-truncated product of spheres
    let x: MonoidSpec = "X(NA(1),F(2))".parse().unwrap();
    let want: usize = (0..=4).map(|i| (1usize << (4 - i + 1)) - 1).sum();
    assert_eq!(x.ball(4).len(), want);
}

#[test]
fn ball_order_is_degree_then_lexicographic() {
    for spec in specs() {
        let ball = spec.ball(3);
        assert!(spec.is_identity(&ball[0]));
        for w in ball.windows(2) {
            let (a, b) = (spec.word(&w[0]), spec.word(&w[1]));
            assert!((a.len(), &a) < (b.len(), &b), "{spec}: {a:?} before {b:?}");
        }
    }
}
