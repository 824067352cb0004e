mod common;

use fusilli::interp::{self, Interp, RunOptions};
use fusilli::peval::wrap;
use fusilli::pipeline::{
    build_unit, check, compile_to_c, compile_to_c_plain, drain, evaluate, from_json, parse_pipeline,
    print_pipeline, to_json, Chain, Expr, Op, PipelineDesc, Sink, Source, Step,
};
use proptest::prelude::*;

const FUEL: u64 = 10_000_000;

fn cases(n: u32) -> ProptestConfig {
    ProptestConfig {
        cases: n,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(cases(300))]

    #[test]
    fn drains_match_the_list_model(seed in any::<u64>(), arg_seed in any::<u64>()) {
        let d = common::pipeline(seed);
        check(&d).unwrap();
        let args = common::args(&d, arg_seed);
        let want = common::reference_drain(&d, &args, 5000);
        let got = drain(&d, &args, want.len() + 1).unwrap();
        prop_assert_eq!(got, want, "{}", print_pipeline(&d));
    }

    #[test]
    fn results_match_the_list_model(seed in any::<u64>(), arg_seed in any::<u64>()) {
        let d = common::pipeline(seed);
        let args = common::args(&d, arg_seed);
        let want = common::reference_result(&d, &args);
        prop_assert_eq!(evaluate(&d, &args).unwrap(), want.clone(), "{}", print_pipeline(&d));
        let u = build_unit(&wrap(Interp::new()), &d).unwrap();
        prop_assert_eq!(interp::eval_unit(&u, &args).unwrap(), want);
    }

    #[test]
    fn evaluation_is_fuel_bounded_and_deterministic(seed in any::<u64>(), arg_seed in any::<u64>()) {
        let d = common::pipeline(seed);
        let args = common::args(&d, arg_seed);
        let u = build_unit(&Interp::new(), &d).unwrap();
        let opts = RunOptions { fuel: Some(FUEL), trace: true };
        let a = interp::run(&u, &args, &opts).unwrap();
        let b = interp::run(&u, &args, &opts).unwrap();
        prop_assert_eq!(a.value, b.value);
        prop_assert_eq!(a.steps, b.steps);
        prop_assert_eq!(a.trace, b.trace);
    }

    #[test]
    fn text_and_json_round_trip(seed in any::<u64>()) {
        let d = common::pipeline(seed);
        let text = print_pipeline(&d);
        prop_assert_eq!(&parse_pipeline(&text).unwrap(), &d, "{}", text);
        prop_assert_eq!(&from_json(&to_json(&d)).unwrap(), &d);
    }

    #[test]
    fn compilation_is_deterministic_and_peval_never_grows(seed in any::<u64>()) {
        let d = common::pipeline(seed);
        let a = compile_to_c(&d).unwrap();
        prop_assert_eq!(&a, &compile_to_c(&d).unwrap());
        let plain = compile_to_c_plain(&d).unwrap();
        let count = common::size_without_unused_markers;
        prop_assert!(count(&a.text) <= count(&plain.text), "{}\n{}", a.text, plain.text);
        prop_assert!(fusilli::fusion_scan::scan_text(&a.text).unwrap().passed(), "{}", a.text);
    }

    /// Pulling a stream through a zip linearizes it; the elements must not change.
    #[test]
    fn linearized_streams_drain_the_same(seed in any::<u64>(), arg_seed in any::<u64>()) {
        let d = common::pipeline(seed);
        let args = common::args(&d, arg_seed);
        let want = common::reference_drain(&d, &args, 5000);
        let zipped = PipelineDesc {
            chain: Chain::new(
                Source::ZipWith {
                    f: Expr::var("y"),
                    left: Box::new(Chain::new(Source::Iota(Expr::int(0)), vec![])),
                    right: Box::new(d.chain.clone()),
                },
                vec![],
            ),
            ..d.clone()
        };
        prop_assert_eq!(drain(&zipped, &args, want.len() + 1).unwrap(), want);
    }
}

fn with_ops(d: &PipelineDesc, ops: &[Op]) -> PipelineDesc {
    let mut d = d.clone();
    d.chain.ops.extend(ops.iter().cloned().map(Step::from));
    d.sink = Sink::Sum;
    d
}

fn e(text: &str) -> Expr {
    fusilli::pipeline::parse_expr(text).unwrap()
}

fn int_pipeline(seed: u64) -> PipelineDesc {
    (seed..)
        .map(common::pipeline)
        .find(|d| check(d).unwrap().elem == fusilli::backend::SemType::Int)
        .unwrap()
}

proptest! {
    #![proptest_config(cases(100))]

    #[test]
    fn map_map_is_map_of_composition(seed in any::<u64>(), arg_seed in any::<u64>()) {
        let d = int_pipeline(seed);
        let args = common::args(&d, arg_seed);
        let two = with_ops(&d, &[Op::Map(e("e * 3 + 1")), Op::Map(e("e % 7 - e"))]);
        let one = with_ops(&d, &[Op::Map(e("(e * 3 + 1) % 7 - (e * 3 + 1)"))]);
        prop_assert_eq!(drain(&two, &args, 5000).unwrap(), drain(&one, &args, 5000).unwrap());
    }

    #[test]
    fn take_take_is_take_of_min(seed in any::<u64>(), arg_seed in any::<u64>(), m in 0..6i32, n in 0..6i32) {
        let d = int_pipeline(seed);
        let args = common::args(&d, arg_seed);
        let two = with_ops(&d, &[Op::Take(Expr::int(m)), Op::Take(Expr::int(n))]);
        let one = with_ops(&d, &[Op::Take(Expr::int(m.min(n)))]);
        prop_assert_eq!(drain(&two, &args, 5000).unwrap(), drain(&one, &args, 5000).unwrap());
    }

    #[test]
    fn filter_filter_is_filter_of_conjunction(seed in any::<u64>(), arg_seed in any::<u64>()) {
        let d = int_pipeline(seed);
        let args = common::args(&d, arg_seed);
        let two = with_ops(&d, &[Op::Filter(e("e % 2 == 0")), Op::Filter(e("e > -20"))]);
        let one = with_ops(&d, &[Op::Filter(e("e > -20 && e % 2 == 0"))]);
        prop_assert_eq!(drain(&two, &args, 5000).unwrap(), drain(&one, &args, 5000).unwrap());
    }

    #[test]
    fn zips_are_as_long_as_the_shorter_side(s1 in any::<u64>(), s2 in any::<u64>(), arg_seed in any::<u64>()) {
        let (l, r) = (int_pipeline(s1), int_pipeline(s2));
        // Rename the right side's parameters apart from the left's.
        let r_text = print_pipeline(&r);
        let zipped_text = format!(
            "pipeline z({}) = zip_with(x * 2 + y, {}, {}) |> sum",
            l.params.iter().map(|p| format!("{}: {}", p.name, p.ty.keyword()))
                .chain(r.params.iter().map(|p| format!("r_{}: {}", p.name, p.ty.keyword())))
                .collect::<Vec<_>>().join(", "),
            chain_text(&l),
            rename(&chain_text(&r), &r),
        );
        let _ = r_text;
        let z = parse_pipeline(&zipped_text).unwrap();
        let (la, ra) = (common::args(&l, arg_seed), common::args(&r, arg_seed.wrapping_add(1)));
        let xs = common::reference_drain(&l, &la, 5000);
        let ys = common::reference_drain(&r, &ra, 5000);
        let args: Vec<_> = la.into_iter().chain(ra).collect();
        let got = drain(&z, &args, 5000).unwrap();
        prop_assert_eq!(got.len(), xs.len().min(ys.len()));
        let want: Vec<_> = xs.iter().zip(&ys).map(|(x, y)| {
            fusilli::interp::Value::Int(x.as_int().unwrap().wrapping_mul(2).wrapping_add(y.as_int().unwrap()))
        }).collect();
        prop_assert_eq!(got, want);
    }
}

/// The chain of a printed pipeline: everything between `=` and the sink.
fn chain_text(d: &PipelineDesc) -> String {
    let text = print_pipeline(&PipelineDesc {
        sink: Sink::Sum,
        ..d.clone()
    });
    let body = text.split_once("=\n").unwrap().1;
    body.trim_end().strip_suffix("|> sum").unwrap().trim().to_string()
}

fn rename(text: &str, d: &PipelineDesc) -> String {
    let mut out = String::new();
    let mut word = String::new();
    let flush = |word: &mut String, out: &mut String| {
        if d.params.iter().any(|p| &p.name == word) {
            out.push_str("r_");
        }
        out.push_str(word);
        word.clear();
    };
    for ch in text.chars() {
        if ch.is_alphanumeric() || ch == '_' {
            word.push(ch);
        } else {
            flush(&mut word, &mut out);
            out.push(ch);
        }
    }
    flush(&mut word, &mut out);
    out
}

#[test]
fn zip_after_map_commutes() {
    let mapped = parse_pipeline(
        "pipeline z(a: int_array, b: int_array) = zip_with(x - y, of_arr(a) |> map(e * e), of_arr(b)) |> sum",
    )
    .unwrap();
    let plain = parse_pipeline(
        "pipeline z(a: int_array, b: int_array) = zip_with(x * x - y, of_arr(a), of_arr(b)) |> sum",
    )
    .unwrap();
    for seed in 0..50 {
        let args = common::args(&mapped, seed);
        assert_eq!(
            drain(&mapped, &args, 100).unwrap(),
            drain(&plain, &args, 100).unwrap()
        );
    }
}

#[test]
fn iota_take_sums_in_closed_form() {
    for k in -100..=100 {
        for n in [0, 1, 2, 7, 50, 100] {
            let d = parse_pipeline(&format!("pipeline t() = iota({k}) |> take({n}) |> sum")).unwrap();
            let want = n * k + n * (n - 1) / 2;
            assert_eq!(evaluate(&d, &[]).unwrap().as_int(), Some(want), "k={k} n={n}");
        }
    }
}

#[test]
fn corpus_covers_every_construct() {
    let mut seen = std::collections::BTreeSet::new();
    fn walk(c: &Chain, seen: &mut std::collections::BTreeSet<&'static str>) {
        match &c.source {
            Source::Iota(_) => seen.insert("iota"),
            Source::OfArr(_) => seen.insert("of_arr"),
            Source::Range(..) => seen.insert("range"),
            Source::ZipWith { left, right, .. } => {
                walk(left, seen);
                walk(right, seen);
                seen.insert("zip_with")
            }
        };
        for s in &c.ops {
            seen.insert(s.op.name());
            if let Op::FlatMap { body, .. } = &s.op {
                walk(body, seen);
            }
        }
    }
    for seed in 0..500 {
        walk(&common::pipeline(seed).chain, &mut seen);
    }
    for name in [
        "iota",
        "of_arr",
        "range",
        "zip_with",
        "map",
        "filter",
        "take",
        "take_while",
        "drop",
        "drop_while",
        "flat_map",
        "map_accum",
    ] {
        assert!(seen.contains(name), "{name} never generated");
    }
}

#[test]
fn map_accum_scans() {
    let scan = |init: i32, xs: &[i32], f: fn(i32, i32) -> (i32, i32)| -> Vec<i32> {
        let mut s = init;
        xs.iter()
            .map(|&x| {
                let (next, out) = f(s, x);
                s = next;
                out
            })
            .collect()
    };
    let run = |text: &str, xs: &[i32]| -> Vec<i32> {
        let d = parse_pipeline(text).unwrap();
        let args = [fusilli::interp::Value::int_array(xs)];
        drain(&d, &args, 100)
            .unwrap()
            .iter()
            .map(|v| v.as_int().unwrap())
            .collect()
    };
    // Running sum: the output sees the updated state.
    let running = "pipeline r(a: int_array) = of_arr(a) |> map_accum(0, s + e, s + e) |> sum";
    assert_eq!(
        run(running, &[1, 2, 3]),
        scan(0, &[1, 2, 3], |s, x| (s + x, s + x))
    );
    assert_eq!(run(running, &[1, 2, 3]), [1, 3, 6]);
    // Delta decoding is the same scan.
    assert_eq!(run(running, &[5, 1, 1]), [5, 6, 7]);
    // A state-ignoring step is a map.
    for xs in [&[][..], &[4, -2, 9], &[0, 0, 7, 100]] {
        let accum = run(
            "pipeline m(a: int_array) = of_arr(a) |> map_accum(0, s, e * 3 - 1) |> sum",
            xs,
        );
        assert_eq!(
            accum,
            run(
                "pipeline m(a: int_array) = of_arr(a) |> map(e * 3 - 1) |> sum",
                xs
            )
        );
    }
}
