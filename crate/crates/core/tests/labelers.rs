mod support;

use gesture_labeler::labeler::moving::all_keys;
use gesture_labeler::prelude::*;
use proptest::prelude::*;
use support::*;

fn check_layout(labels: &[LabelSpan], s: &TokenizedSentence, th0: f64, w_max: usize) {
    let mut end = 0;
    for l in labels {
        assert!(l.start >= end, "overlap or out of order: {labels:?}");
        assert!(l.len >= 1 && l.len <= w_max);
        assert!(l.end() <= s.len());
        assert!(l.score > th0 && l.score <= 1.0, "score {} vs th0 {th0}", l.score);
        end = l.end();
    }
}

fn arb_label(sid: &'static str) -> impl Strategy<Value = LabelSpan> {
    (0usize..20, 1usize..6, 0u32..=100).prop_map(move |(start, len, s)| {
        LabelSpan::predicted(sid, "g", start, len, s as f64 / 100.0, None)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn moving_labels_are_ordered_disjoint_and_above_threshold(seed in any::<u64>()) {
        let c = random_case(seed);
        let labels = label_moving(&c.sentence, &c.refs, &c.cfg, &Scorer::new(&c.backend)).unwrap();
        check_layout(&labels, &c.sentence, c.cfg.th0, c.cfg.w_max);
    }

    #[test]
    fn memoization_and_prefetch_do_not_change_labels(seed in any::<u64>()) {
        let c = random_case(seed);
        let plain = label_moving(&c.sentence, &c.refs, &c.cfg, &Scorer::uncached(&c.backend)).unwrap();
        for prefetch in [true, false] {
            let cfg = EngineConfig { prefetch, ..c.cfg.clone() };
            let memo = label_moving(&c.sentence, &c.refs, &cfg, &Scorer::new(&c.backend)).unwrap();
            prop_assert_eq!(&memo, &plain);
        }
    }

    #[test]
    fn memoized_calls_are_bounded_by_reachable_keys(seed in any::<u64>()) {
        let c = random_case(seed);
        let bound = all_keys(&c.sentence, &c.refs, c.cfg.w_max).count() as u64;
        let total_refs = c.refs.total_references() as u64;
        prop_assert!(bound <= c.sentence.len() as u64 * c.cfg.w_max as u64 * total_refs);
        for prefetch in [true, false] {
            let cfg = EngineConfig { prefetch, ..c.cfg.clone() };
            let scorer = Scorer::new(&c.backend);
            label_moving(&c.sentence, &c.refs, &cfg, &scorer).unwrap();
            let st = scorer.stats();
            prop_assert!(st.distinct <= bound);
            prop_assert_eq!(st.backend_calls, st.distinct);
            prop_assert!(st.queries >= st.distinct || prefetch);
        }
    }

    #[test]
    fn th1_of_one_disables_the_context_check(seed in any::<u64>()) {
        let c = random_case(seed);
        let base = EngineConfig { th1: 1.0, p: 1, check1_mode: Check1Mode::Drop, ..c.cfg.clone() };
        let want = label_moving(&c.sentence, &c.refs, &base, &Scorer::new(&c.backend)).unwrap();
        for (p, mode) in [(4, Check1Mode::Drop), (2, Check1Mode::Rise)] {
            let cfg = EngineConfig { p, check1_mode: mode, ..base.clone() };
            let got = label_moving(&c.sentence, &c.refs, &cfg, &Scorer::new(&c.backend)).unwrap();
            prop_assert_eq!(&got, &want);
        }
    }

    #[test]
    fn fixed_labels_use_the_table_window(seed in any::<u64>(), win in 1usize..=4) {
        let c = random_case(seed);
        let win = win.min(c.cfg.w_max);
        let table = WindowTable::uniform(&c.refs, win);
        let scorer = Scorer::new(&c.backend);
        let labels = label_fixed(&c.sentence, &c.refs, &table, &c.cfg, &scorer).unwrap();
        check_layout(&labels, &c.sentence, c.cfg.th0, c.cfg.w_max);
        prop_assert!(labels.iter().all(|l| l.len == win));
        let n = c.sentence.len();
        let upper = if n >= win { (n - win + 1) * c.refs.total_references() } else { 0 };
        prop_assert!(scorer.stats().distinct as usize <= upper);
    }

    #[test]
    fn baseline_is_deterministic_and_disjoint(
        seed in any::<u64>(),
        n in 0usize..60,
        q in 0.0f64..=1.0,
        th0 in 0.0f64..0.95,
        w_max in 1usize..=10,
    ) {
        let refs = fixture::default_reference_set();
        let stats = BaselineStats::fallback(&refs, q);
        let s = TokenizedSentence::new("b", vec!["w"; n].join(" "));
        let cfg = EngineConfig { seed, th0, w_max, ..Default::default() };
        let a = label_baseline(&s, &stats, &cfg).unwrap();
        check_layout(&a, &s, th0, w_max);
        prop_assert_eq!(label_baseline(&s, &stats, &cfg).unwrap(), a);
    }

    #[test]
    fn ranking_ignores_input_order(
        raw in prop::collection::vec((0u32..5, 0usize..3, 0usize..3, 1usize..4, 0usize..3), 1..20),
        rot in 0usize..20,
    ) {
        let cands: Vec<Candidate> = raw
            .iter()
            .map(|&(v, g, i, win, start)| Candidate {
                score: v as f64 / 4.0,
                gesture_index: g,
                ref_index: i,
                win,
                start,
            })
            .collect();
        let best = rank_candidates(&cands).unwrap();
        let mut rotated = cands.clone();
        rotated.rotate_left(rot % cands.len());
        prop_assert_eq!(rank_candidates(&rotated).unwrap(), best);
        let mut reversed = cands.clone();
        reversed.reverse();
        prop_assert_eq!(rank_candidates(&reversed).unwrap(), best);
        prop_assert!(cands.iter().all(|c| c.score <= best.score));
    }

    #[test]
    fn span_iou_is_symmetric_and_bounded(a in arb_label("s"), b in arb_label("s")) {
        let ab = span_iou(&a, &b).unwrap();
        prop_assert_eq!(ab, span_iou(&b, &a).unwrap());
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(span_iou(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn ap_is_invariant_under_monotone_rescoring(
        pred in prop::collection::vec(arb_label("s"), 0..12),
        gt in prop::collection::vec(arb_label("s"), 1..6),
    ) {
        let gt: Vec<LabelSpan> = gt
            .into_iter()
            .map(|l| LabelSpan::ground_truth("s", "g", l.start, l.len, None))
            .collect();
        let squashed: Vec<LabelSpan> = pred
            .iter()
            .map(|l| LabelSpan { score: l.score * l.score / 2.0, ..l.clone() })
            .collect();
        let a = average_precision(&pred, &gt, "g", 0.5).unwrap();
        let b = average_precision(&squashed, &gt, "g", 0.5).unwrap();
        prop_assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn corpus_iou_is_symmetric_without_score_filter(
        a in prop::collection::vec(arb_label("s"), 0..6),
        b in prop::collection::vec(arb_label("s"), 0..6),
    ) {
        prop_assert_eq!(corpus_iou(&a, &b, "g", 0.0), corpus_iou(&b, &a, "g", 0.0));
    }
}

#[test]
fn corpus_labeling_runs_every_algorithm() {
    let refs = fixture::default_reference_set();
    let corpus = mini_corpus();
    let cfg = EngineConfig::default();
    let scorer = Scorer::new(&JaccardBackend);
    let stats = derive_stats(&mini_gt(), &corpus).unwrap();
    let table = WindowTable::uniform(&refs, 3);
    let runs = [
        Labeler::Baseline(&stats),
        Labeler::Fixed { refs: &refs, windows: &table, scorer: &scorer },
        Labeler::Moving { refs: &refs, scorer: &scorer },
    ];
    for labeler in runs {
        let run = labeler.label_corpus(&corpus, &cfg).unwrap();
        assert_eq!(run.timings.len(), corpus.len());
        for s in &corpus {
            let mine: Vec<_> = run.labels.iter().filter(|l| l.sentence_id == s.id).cloned().collect();
            check_layout(&mine, s, cfg.th0, cfg.w_max);
        }
    }
}
