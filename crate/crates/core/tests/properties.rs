use proptest::prelude::*;

use seeg_rank::dataset::{cv_folds, label_frames, split, Label};
use seeg_rank::dsp::{frame, wavedec, waverec, FrameSpec, Wavelet};
use seeg_rank::ingest::SeizureAnnotation;
use seeg_rank::montage::{expand_range, parse_channel_label, ChannelLabel, ElectrodeEntry, Montage, MontageFile};
use seeg_rank::ranking::{elbow, rank};
use seeg_rank::shapley::{mean_importance, ShapFrameVector};

fn electrode_name() -> impl Strategy<Value = String> {
    "[A-Z]{1,3}"
}

fn montage_strategy() -> impl Strategy<Value = Montage> {
    prop::collection::btree_map(electrode_name(), 1u32..=12, 1..6)
        .prop_flat_map(|sizes| {
            let names: Vec<String> = sizes.keys().cloned().collect();
            let n = names.len();
            (
                Just(sizes),
                Just(names),
                prop::collection::vec(prop::bool::weighted(0.3), n * n),
            )
        })
        .prop_map(|(sizes, names, adjacency)| {
            let n = names.len();
            let electrodes = names
                .iter()
                .enumerate()
                .map(|(i, name)| ElectrodeEntry {
                    name: name.clone(),
                    contacts: sizes[name],
                    zone_neighbors: (0..n)
                        .filter(|&j| j != i && adjacency[i * n + j])
                        .map(|j| names[j].clone())
                        .collect(),
                })
                .collect();
            Montage::from_file_data(&MontageFile { electrodes }).unwrap()
        })
}

fn ann(onset: f64, offset: f64) -> SeizureAnnotation {
    SeizureAnnotation {
        onset_s: onset,
        offset_s: offset,
        label: String::new(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn label_render_parse_round_trip(name in "[A-Z]{1,4}", index in 1u32..10_000) {
        let label = ChannelLabel::new(&name, index).unwrap();
        prop_assert_eq!(parse_channel_label(&label.to_string()).unwrap(), label);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn expanded_ranges_have_no_duplicates(parts in prop::collection::vec(("[A-C]{1,2}", 1u32..8, 0u32..4), 1..6)) {
        let text = parts
            .iter()
            .map(|(e, start, len)| if *len == 0 { format!("{e}{start}") } else { format!("{e}{start}-{}", start + len) })
            .collect::<Vec<_>>()
            .join(", ");
        let labels = expand_range(&text).unwrap();
        let mut sorted = labels.clone();
        sorted.sort();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), labels.len());
        // first occurrence wins: the first token's first label leads
        let (e, start, _) = &parts[0];
        prop_assert_eq!(labels[0].to_string(), format!("{e}{start}"));
    }

    #[test]
    fn extensions_nest(montage in montage_strategy(), picks in prop::collection::vec(any::<prop::sample::Index>(), 0..5)) {
        let universe = montage.channels();
        let selected: Vec<ChannelLabel> = picks.iter().map(|i| i.get(&universe).clone()).collect();
        let electrode = montage.electrode_extension(&selected).unwrap();
        let zone = montage.zone_extension(&selected).unwrap();
        for c in &selected {
            prop_assert!(electrode.contains(c));
        }
        for c in &electrode {
            prop_assert!(zone.contains(c));
        }
        prop_assert_eq!(montage.electrode_extension(&electrode).unwrap(), electrode.clone());
        if selected.is_empty() {
            prop_assert!(zone.is_empty());
        }
    }

    #[test]
    fn frame_count_formula(n in 0usize..50_000, frame_len in 1usize..3000, hop in 1usize..3000) {
        let spec = FrameSpec::from_samples(n, frame_len, hop);
        let expected = if n >= frame_len { (n - frame_len) / hop + 1 } else { 0 };
        prop_assert_eq!(spec.n_frames, expected);
        let signal = vec![0.0; n];
        let frames = frame(&signal, &spec);
        prop_assert_eq!(frames.len(), expected);
        if let Some(last) = frames.last() {
            prop_assert_eq!(last.len(), frame_len);
        }
    }

    #[test]
    fn perfect_reconstruction(seed in any::<u64>(), len in 64usize..600, levels in 1usize..5) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..len).map(|_| rng.random_range(-100.0..100.0)).collect();
        for wavelet in [Wavelet::Haar, Wavelet::Db2, Wavelet::Db4] {
            let y = waverec(&wavedec(&x, wavelet, levels).unwrap());
            prop_assert_eq!(y.len(), x.len());
            for (a, b) in x.iter().zip(&y) {
                prop_assert!((a - b).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn labels_monotone_in_extension(onset in 5.0f64..80.0, len in 1.0f64..15.0, ext in 0.0f64..30.0, more in 0.0f64..30.0) {
        let spec = FrameSpec::from_samples(100_000, 1000, 500);
        let anns = [ann(onset, onset + len)];
        let a = label_frames(&anns, ext, &spec, 1000.0);
        let b = label_frames(&anns, ext + more, &spec, 1000.0);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!(!(x.is_pps() && !y.is_pps()));
        }
    }

    #[test]
    fn folds_partition_rows(n_pps in 5usize..60, n_non in 5usize..60, k in 2usize..6, seed in any::<u64>()) {
        let mut labels = vec![Label::Pps; n_pps];
        labels.extend(vec![Label::NonSeizure; n_non]);
        let folds = cv_folds(&labels, k, seed).unwrap();
        prop_assert_eq!(folds.len(), k);
        let mut seen: Vec<usize> = folds.iter().flat_map(|f| f.test.iter().copied()).collect();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..labels.len()).collect::<Vec<_>>());
        for f in &folds {
            prop_assert_eq!(f.train.len() + f.test.len(), labels.len());
            prop_assert!(f.test.iter().all(|r| !f.train.contains(r)));
        }
        prop_assert_eq!(cv_folds(&labels, k, seed).unwrap(), folds);
        let s = split(&labels, 0.2, seed).unwrap();
        prop_assert_eq!(s.train.len() + s.test.len(), labels.len());
    }

    #[test]
    fn elbow_is_affine_invariant(values in prop::collection::vec(-10.0f64..10.0, 3..25), a in 0.1f64..10.0, b in -10.0f64..10.0) {
        let labels: Vec<ChannelLabel> = (1..=values.len()).map(|i| ChannelLabel::new("LA", i as u32).unwrap()).collect();
        let mut sorted = values.clone();
        sorted.sort_by(|x, y| y.total_cmp(x));
        let plain: Vec<(ChannelLabel, f64)> = labels.iter().cloned().zip(sorted.iter().copied()).collect();
        let scaled: Vec<(ChannelLabel, f64)> = labels.iter().cloned().zip(sorted.iter().map(|v| a * v + b)).collect();
        let e1 = elbow(&plain, true);
        let e2 = elbow(&scaled, true);
        // ties among second differences can flip under rounding; compare
        // only when the maximum is clear
        let mut d = e1.second_diffs.clone();
        d.sort_by(|x, y| y.total_cmp(x));
        prop_assume!(d.len() < 2 || d[0] - d[1] > 1e-9);
        prop_assert_eq!(e1.k_star, e2.k_star);
        prop_assert_eq!(e1.order, e2.order);
    }

    #[test]
    fn ranking_ignores_frame_order(phis in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 4), 1..20), rot in 0usize..20) {
        let players: Vec<ChannelLabel> = (1..=4).map(|i| ChannelLabel::new("LB", i).unwrap()).collect();
        let seq: Vec<ShapFrameVector> = phis
            .iter()
            .enumerate()
            .map(|(t, phi)| ShapFrameVector { t, phi: phi.clone(), f_full: 0.0, f_empty: 0.0 })
            .collect();
        let mut rotated = seq.clone();
        rotated.rotate_left(rot % seq.len());
        let a = rank(&mean_importance(&seq, &players).unwrap());
        let b = rank(&mean_importance(&rotated, &players).unwrap());
        let order = |r: &[(ChannelLabel, f64)]| r.iter().map(|(c, _)| c.clone()).collect::<Vec<_>>();
        prop_assert_eq!(order(&a), order(&b));
        for ((_, x), (_, y)) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }
}
