//! Randomized invariants: instance-level symmetries of the reference
//! classifier, agreement of both network constructions with it, and
//! round-trip identity of every text format.

use proptest::prelude::*;
use snn_dbscan::codec::{decode_flat, decode_systolic, encode_flat, encode_systolic};
use snn_dbscan::netfmt::{deserialize, serialize};
use snn_dbscan::{
    build_flat, build_systolic, classify, neighborhood_count, systolic_solution_steps, validate,
    DbscanParams, EventFrame, Label, LabelGrid, Orientation, Simulator, FLAT_SOLUTION_STEPS,
};

fn arb_instance() -> impl Strategy<Value = (DbscanParams, EventFrame)> {
    (1..=8u32, 1..=8u32, 1..=3u32)
        .prop_flat_map(|(rows, cols, eps)| {
            let cap = (2 * eps + 1) * (2 * eps + 1);
            (
                Just((rows, cols, eps)),
                1..=cap,
                proptest::collection::vec(any::<bool>(), (rows * cols) as usize),
            )
        })
        .prop_map(|((rows, cols, eps), min_pts, bits)| {
            let params = DbscanParams::new(rows, cols, eps, min_pts).unwrap();
            let mut frame = EventFrame::new(rows, cols);
            for (i, bit) in bits.into_iter().enumerate() {
                frame.set(i as u32 / cols, i as u32 % cols, bit);
            }
            (params, frame)
        })
}

fn sim_labels_flat(params: &DbscanParams, frame: &EventFrame) -> LabelGrid {
    let net = build_flat(params, Orientation::Columns);
    let sim = Simulator::new(&net).unwrap();
    let sched = encode_flat(&net, frame, 0).unwrap();
    let raster = sim.run(&sched, FLAT_SOLUTION_STEPS).unwrap();
    decode_flat(&net, &raster, 0, frame).unwrap()
}

fn sim_labels_systolic(params: &DbscanParams, frame: &EventFrame) -> LabelGrid {
    let net = build_systolic(params, Orientation::Columns);
    let sim = Simulator::new(&net).unwrap();
    let sched = encode_systolic(&net, frame, 0).unwrap();
    let horizon = systolic_solution_steps(frame.cols(), params.epsilon());
    let raster = sim.run(&sched, horizon).unwrap();
    decode_systolic(&net, &raster, 0, frame).unwrap()
}

proptest! {
    /// Transposing the frame transposes the labels and nothing else.
    #[test]
    fn oracle_commutes_with_transpose((params, frame) in arb_instance()) {
        let direct = classify(&frame, &params).unwrap();
        let transposed = classify(&frame.transposed(), &params.transposed()).unwrap();
        prop_assert_eq!(direct.transposed(), transposed);
    }

    /// Mirroring either axis relabels positions without changing verdicts.
    #[test]
    fn oracle_commutes_with_mirrors((params, frame) in arb_instance()) {
        let labels = classify(&frame, &params).unwrap();
        let cols_mirrored = classify(&frame.mirrored_cols(), &params).unwrap();
        let rows_mirrored = classify(&frame.mirrored_rows(), &params).unwrap();
        let c = frame.cols();
        let r = frame.rows();
        for (row, col) in (0..r).flat_map(|row| (0..c).map(move |col| (row, col))) {
            prop_assert_eq!(labels.get(row, col), cols_mirrored.get(row, c - 1 - col));
            prop_assert_eq!(labels.get(row, col), rows_mirrored.get(r - 1 - row, col));
        }
    }

    /// A denser threshold can only demote cells: the core set shrinks and
    /// cells without events never gain a label.
    #[test]
    fn raising_min_pts_only_demotes((params, frame) in arb_instance()) {
        let cap = params.neighborhood_capacity();
        prop_assume!(params.min_pts() < cap);
        let stricter = DbscanParams::new(
            params.rows(), params.cols(), params.epsilon(), params.min_pts() + 1,
        ).unwrap();
        let loose = classify(&frame, &params).unwrap();
        let strict = classify(&frame, &stricter).unwrap();
        for r in 0..frame.rows() {
            for c in 0..frame.cols() {
                if strict.get(r, c) == Label::Core {
                    prop_assert_eq!(loose.get(r, c), Label::Core);
                }
                prop_assert_eq!(
                    loose.get(r, c) == Label::NoEvent,
                    strict.get(r, c) == Label::NoEvent
                );
            }
        }
    }

    /// Every label is re-derivable from raw neighborhood counts.
    #[test]
    fn oracle_labels_are_self_consistent((params, frame) in arb_instance()) {
        let labels = classify(&frame, &params).unwrap();
        let eps = params.epsilon();
        let is_core = |r: u32, c: u32| {
            frame.get(r, c) && neighborhood_count(&frame, r, c, eps) >= params.min_pts()
        };
        for r in 0..frame.rows() {
            for c in 0..frame.cols() {
                let other_core = (r.saturating_sub(eps)..=(r + eps).min(frame.rows() - 1))
                    .flat_map(|i| {
                        (c.saturating_sub(eps)..=(c + eps).min(frame.cols() - 1))
                            .map(move |j| (i, j))
                    })
                    .any(|(i, j)| (i, j) != (r, c) && is_core(i, j));
                let expected = if !frame.get(r, c) {
                    Label::NoEvent
                } else if is_core(r, c) {
                    Label::Core
                } else if other_core {
                    Label::Border
                } else {
                    Label::Noise
                };
                prop_assert_eq!(labels.get(r, c), expected);
            }
        }
    }

    /// The master property: both constructions decode to the oracle labels,
    /// so they also agree with each other.
    #[test]
    fn both_constructions_match_the_oracle((params, frame) in arb_instance()) {
        let oracle = classify(&frame, &params).unwrap();
        let flat = sim_labels_flat(&params, &frame);
        prop_assert_eq!(&flat, &oracle);
        let systolic = sim_labels_systolic(&params, &frame);
        prop_assert_eq!(&systolic, &oracle);
    }

    /// Generated networks always satisfy the hardware constraints.
    #[test]
    fn generated_networks_validate_clean((params, _) in arb_instance()) {
        for net in [
            build_flat(&params, Orientation::Columns),
            build_flat(&params, Orientation::Rows),
            build_systolic(&params, Orientation::Columns),
        ] {
            let report = validate(&net);
            prop_assert!(report.is_valid(), "{:?}", report.violations);
        }
    }

    /// Network text round-trips to a structurally identical network.
    #[test]
    fn network_text_round_trips((params, _) in arb_instance()) {
        for net in [
            build_flat(&params, Orientation::Columns),
            build_systolic(&params, Orientation::Columns),
        ] {
            let text = serialize(&net);
            let back = deserialize(&text).unwrap();
            prop_assert!(back.structurally_equal(&net));
            // Canonical writer: same bytes again.
            prop_assert_eq!(serialize(&back), text);
        }
    }

    /// Frame text round-trips in both sparse and dense form.
    #[test]
    fn frame_text_round_trips((_, frame) in arb_instance()) {
        prop_assert_eq!(EventFrame::parse(&frame.to_sparse_text()).unwrap(), frame.clone());
        prop_assert_eq!(EventFrame::parse(&frame.to_dense_text()).unwrap(), frame);
    }

    /// Label text round-trips through the machine format.
    #[test]
    fn label_text_round_trips((params, frame) in arb_instance()) {
        let labels = classify(&frame, &params).unwrap();
        prop_assert_eq!(LabelGrid::parse(&labels.to_text()).unwrap(), labels);
    }
}
