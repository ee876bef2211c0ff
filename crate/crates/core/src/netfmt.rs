//! Text serialization for networks.
//!
//! Layout:
//!
//! ```text
//! snn-dbscan v1
//! params <rows> <cols> <epsilon> <min_pts> <builder> <orientation>
//! partition delete <out_r0> <out_rows> <out_c0> <out_cols>   (optional)
//! partition retain <out_rows> <out_cols>                     (optional)
//! N <id> <threshold> in|hid|out <collection> <row> [<col>|<offset>]
//! S <from> <to> <weight> <delay>
//! ```
//!
//! `#` starts a comment, blank lines are skipped, and apart from the version
//! line coming first, lines may appear in any order. Output is canonical:
//! neurons sorted by id, synapses sorted by all four fields, so two networks
//! serialize identically exactly when they are structurally equal.
//!
//! The second role coordinate is read as a chain offset (signed) for the I
//! and Core collections of column-streaming builders, and as a grid column
//! (unsigned) otherwise; custom networks fall back to column for
//! non-negative values.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::network::{
    BuilderKind, Collection, NetMeta, Network, Neuron, Orientation, PartitionMeta, RolePos,
    RoleTag, Synapse,
};

pub const FORMAT_VERSION: &str = "snn-dbscan v1";

fn uses_offsets(builder: BuilderKind, collection: Collection) -> bool {
    matches!(builder, BuilderKind::Systolic | BuilderKind::PartialSystolic)
        && matches!(collection, Collection::Input | Collection::Core)
}

pub fn serialize(net: &Network) -> String {
    let meta = net.meta();
    let mut out = String::new();
    out.push_str(FORMAT_VERSION);
    out.push('\n');
    out.push_str(&format!(
        "params {} {} {} {} {} {}\n",
        meta.rows,
        meta.cols,
        meta.epsilon,
        meta.min_pts,
        meta.builder.token(),
        meta.orientation.token()
    ));
    match meta.partition {
        Some(PartitionMeta::Delete { out_r0, out_rows, out_c0, out_cols }) => {
            out.push_str(&format!(
                "partition delete {out_r0} {out_rows} {out_c0} {out_cols}\n"
            ));
        }
        Some(PartitionMeta::Retain { out_rows, out_cols }) => {
            out.push_str(&format!("partition retain {out_rows} {out_cols}\n"));
        }
        None => {}
    }

    for n in net.neurons() {
        let flag = if n.is_input {
            "in"
        } else if n.is_output {
            "out"
        } else {
            "hid"
        };
        out.push_str(&format!(
            "N {} {} {} {} {}",
            n.id,
            n.threshold,
            flag,
            n.role.collection.token(),
            n.role.row
        ));
        match n.role.pos {
            RolePos::Col(c) => out.push_str(&format!(" {c}")),
            RolePos::Offset(e) => out.push_str(&format!(" {e}")),
            RolePos::RowOnly => {}
        }
        out.push('\n');
    }

    let mut synapses: Vec<&Synapse> = net.synapses().iter().collect();
    synapses.sort_unstable();
    for s in synapses {
        out.push_str(&format!("S {} {} {} {}\n", s.from, s.to, s.weight, s.delay));
    }
    out
}

struct LineParser<'a> {
    line: usize,
    fields: Vec<&'a str>,
    cursor: usize,
}

impl<'a> LineParser<'a> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            msg: msg.into(),
        }
    }

    fn next(&mut self, what: &str) -> Result<&'a str> {
        let f = self
            .fields
            .get(self.cursor)
            .ok_or_else(|| self.err(format!("missing {what}")))?;
        self.cursor += 1;
        Ok(f)
    }

    fn num<T: std::str::FromStr>(&mut self, what: &str) -> Result<T> {
        let raw = self.next(what)?;
        raw.parse::<T>()
            .map_err(|_| self.err(format!("bad {what}: {raw:?}")))
    }

    fn finish(&self) -> Result<()> {
        if self.cursor != self.fields.len() {
            return Err(self.err(format!(
                "unexpected trailing fields: {:?}",
                &self.fields[self.cursor..]
            )));
        }
        Ok(())
    }
}

pub fn deserialize(text: &str) -> Result<Network> {
    let mut meta: Option<(usize, NetMeta)> = None;
    let mut partition: Option<(usize, PartitionMeta)> = None;
    // Raw neuron rows keep `(line, id, threshold, flag, collection, row, pos)`
    // until the builder kind is known, since the position reading depends
    // on it.
    struct RawNeuron<'a> {
        line: usize,
        id: u32,
        threshold: u32,
        flag: &'a str,
        collection: Collection,
        row: u32,
        pos: Option<i64>,
    }
    let mut raw_neurons: Vec<RawNeuron> = Vec::new();
    let mut raw_synapses: Vec<(usize, Synapse)> = Vec::new();
    let mut saw_version = false;

    for (line_no, raw_line) in text.lines().enumerate() {
        let line_no = line_no + 1;
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if !saw_version {
            if line != FORMAT_VERSION {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected version line {FORMAT_VERSION:?}, got {line:?}"),
                });
            }
            saw_version = true;
            continue;
        }

        let mut p = LineParser {
            line: line_no,
            fields: line.split_whitespace().collect(),
            cursor: 0,
        };
        match p.next("record tag")? {
            "params" => {
                if let Some((prev, _)) = meta {
                    return Err(p.err(format!("duplicate params line (first at line {prev})")));
                }
                let rows: u32 = p.num("rows")?;
                let cols: u32 = p.num("cols")?;
                let epsilon: u32 = p.num("epsilon")?;
                let min_pts: u32 = p.num("min_pts")?;
                let builder_tok = p.next("builder")?;
                let builder = BuilderKind::from_token(builder_tok)
                    .ok_or_else(|| p.err(format!("unknown builder {builder_tok:?}")))?;
                let orient_tok = p.next("orientation")?;
                let orientation = Orientation::from_token(orient_tok)
                    .ok_or_else(|| p.err(format!("unknown orientation {orient_tok:?}")))?;
                p.finish()?;
                if rows == 0 || epsilon == 0 || min_pts == 0 {
                    return Err(p.err("rows, epsilon and min_pts must be >= 1"));
                }
                meta = Some((
                    line_no,
                    NetMeta {
                        rows,
                        cols,
                        epsilon,
                        min_pts,
                        builder,
                        orientation,
                        partition: None,
                    },
                ));
            }
            "partition" => {
                if partition.is_some() {
                    return Err(p.err("duplicate partition line"));
                }
                let kind = p.next("partition policy")?;
                let parsed = match kind {
                    "delete" => PartitionMeta::Delete {
                        out_r0: p.num("out_r0")?,
                        out_rows: p.num("out_rows")?,
                        out_c0: p.num("out_c0")?,
                        out_cols: p.num("out_cols")?,
                    },
                    "retain" => PartitionMeta::Retain {
                        out_rows: p.num("out_rows")?,
                        out_cols: p.num("out_cols")?,
                    },
                    other => return Err(p.err(format!("unknown partition policy {other:?}"))),
                };
                p.finish()?;
                partition = Some((line_no, parsed));
            }
            "N" => {
                let id: u32 = p.num("neuron id")?;
                let threshold: u32 = p.num("threshold")?;
                let flag = p.next("in|hid|out flag")?;
                if !matches!(flag, "in" | "hid" | "out") {
                    return Err(p.err(format!("unknown flag {flag:?}")));
                }
                let coll_tok = p.next("collection")?;
                let collection = Collection::from_token(coll_tok)
                    .ok_or_else(|| p.err(format!("unknown collection {coll_tok:?}")))?;
                let row: u32 = p.num("row")?;
                let pos = if p.cursor < p.fields.len() {
                    Some(p.num::<i64>("position")?)
                } else {
                    None
                };
                p.finish()?;
                raw_neurons.push(RawNeuron {
                    line: line_no,
                    id,
                    threshold,
                    flag,
                    collection,
                    row,
                    pos,
                });
            }
            "S" => {
                let from: u32 = p.num("source id")?;
                let to: u32 = p.num("target id")?;
                let weight: i8 = p.num("weight")?;
                let delay: u8 = p.num("delay")?;
                p.finish()?;
                raw_synapses.push((line_no, Synapse { from, to, weight, delay }));
            }
            other => {
                return Err(p.err(format!("unknown record tag {other:?}")));
            }
        }
    }

    if !saw_version {
        return Err(Error::Parse {
            line: 1,
            msg: "empty document, missing version line".into(),
        });
    }
    let (_, mut meta) = meta.ok_or_else(|| Error::Parse {
        line: text.lines().count().max(1),
        msg: "missing params line".into(),
    })?;
    meta.partition = partition.map(|(_, p)| p);

    let mut neurons = Vec::with_capacity(raw_neurons.len());
    let mut lines_by_id: HashMap<u32, usize> = HashMap::new();
    for raw in raw_neurons {
        if let Some(prev) = lines_by_id.insert(raw.id, raw.line) {
            return Err(Error::Parse {
                line: raw.line,
                msg: format!("duplicate neuron id {} (first at line {prev})", raw.id),
            });
        }
        let pos = match raw.pos {
            None => RolePos::RowOnly,
            Some(v) => {
                let as_offset = uses_offsets(meta.builder, raw.collection) || v < 0;
                if as_offset {
                    let e = i32::try_from(v).map_err(|_| Error::Parse {
                        line: raw.line,
                        msg: format!("offset {v} out of range"),
                    })?;
                    RolePos::Offset(e)
                } else {
                    let c = u32::try_from(v).map_err(|_| Error::Parse {
                        line: raw.line,
                        msg: format!("column {v} out of range"),
                    })?;
                    RolePos::Col(c)
                }
            }
        };
        neurons.push(Neuron {
            id: raw.id,
            threshold: raw.threshold,
            is_input: raw.flag == "in",
            is_output: raw.flag == "out",
            role: RoleTag {
                collection: raw.collection,
                row: raw.row,
                pos,
            },
        });
    }

    let mut synapses = Vec::with_capacity(raw_synapses.len());
    for (line, s) in raw_synapses {
        for (end, id) in [("source", s.from), ("target", s.to)] {
            if !lines_by_id.contains_key(&id) {
                return Err(Error::Parse {
                    line,
                    msg: format!("synapse references undefined {end} neuron {id}"),
                });
            }
        }
        synapses.push(s);
    }

    Network::new(meta, neurons, synapses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flat::build_flat;
    use crate::grid::DbscanParams;
    use crate::systolic::build_systolic;

    fn params(rows: u32, cols: u32, eps: u32, min_pts: u32) -> DbscanParams {
        DbscanParams::new(rows, cols, eps, min_pts).unwrap()
    }

    #[test]
    fn flat_round_trips_to_identical_bytes() {
        let net = build_flat(&params(4, 5, 1, 4), Orientation::Columns);
        let text = serialize(&net);
        let back = deserialize(&text).unwrap();
        assert!(back.structurally_equal(&net));
        assert_eq!(serialize(&back), text);
    }

    #[test]
    fn systolic_round_trips_with_signed_offsets() {
        let net = build_systolic(&params(5, 4, 2, 7), Orientation::Rows);
        let text = serialize(&net);
        assert!(text.contains(" -2\n"), "offsets serialize signed");
        let back = deserialize(&text).unwrap();
        assert!(back.structurally_equal(&net));
        assert_eq!(serialize(&back), text);
    }

    #[test]
    fn comments_blanks_and_order_are_tolerated() {
        let text = "\
snn-dbscan v1
# a network of two neurons
S 0 1 1 2   # synapse before its neurons

N 1 2 out Core 0 0
params 1 1 1 2 custom columns
N 0 1 in I 0 0
";
        let net = deserialize(text).unwrap();
        assert_eq!(net.neuron_count(), 2);
        assert_eq!(net.synapse_count(), 1);
        assert_eq!(net.meta().builder, BuilderKind::Custom);
        assert_eq!(net.synapses()[0].delay, 2);
    }

    #[test]
    fn version_line_must_come_first() {
        let err = deserialize("params 1 1 1 1 flat columns\nsnn-dbscan v1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
        let err = deserialize("snn-dbscan v2\n").unwrap_err();
        assert!(err.to_string().contains("version"));
        assert!(deserialize("").is_err());
    }

    #[test]
    fn structural_errors_carry_line_numbers() {
        let undefined = "\
snn-dbscan v1
params 1 1 1 2 custom columns
N 0 1 in I 0 0
S 0 7 1 1
";
        let err = deserialize(undefined).unwrap_err();
        assert!(
            matches!(err, Error::Parse { line: 4, .. }),
            "want line 4, got {err}"
        );
        assert!(err.to_string().contains("undefined target neuron 7"));

        let duplicate = "\
snn-dbscan v1
params 1 1 1 2 custom columns
N 0 1 in I 0 0
N 0 1 in I 0 1
";
        let err = deserialize(duplicate).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err}");
    }

    #[test]
    fn malformed_records_are_rejected() {
        let cases = [
            "snn-dbscan v1\nparams 1 1 1 2 custom columns\nQ 1 2\n",
            "snn-dbscan v1\nparams 1 1 1 2 nope columns\n",
            "snn-dbscan v1\nparams 1 1 1 2 custom diagonal\n",
            "snn-dbscan v1\nparams 0 1 1 2 custom columns\n",
            "snn-dbscan v1\nparams 1 1 1 2 custom columns\nN 0 1 in X 0 0\n",
            "snn-dbscan v1\nparams 1 1 1 2 custom columns\nN 0 1 maybe I 0 0\n",
            "snn-dbscan v1\nparams 1 1 1 2 custom columns\nN 0 1 in I 0 0 9\n",
            "snn-dbscan v1\nparams 1 1 1 2 custom columns\nN 0 1 in I 0 0\nS 0 0 1\n",
            "snn-dbscan v1\nparams 1 1 1 2 custom columns\nparams 1 1 1 2 custom columns\n",
            "snn-dbscan v1\n",
        ];
        for text in cases {
            assert!(deserialize(text).is_err(), "accepted: {text:?}");
        }
    }

    #[test]
    fn out_of_range_synapse_values_parse_then_fail_validation() {
        // The format stores what it is given; rule checks live in validate.
        let text = "\
snn-dbscan v1
params 1 1 1 2 custom columns
N 0 1 in I 0 0
N 1 2 out Core 0 0
S 0 1 1 5
";
        let net = deserialize(text).unwrap();
        let report = crate::network::validate(&net);
        assert!(!report.is_valid());
        assert!(report.violations[0].contains("delay 5"));
    }

    #[test]
    fn serialization_is_canonical_across_synapse_order() {
        let meta = NetMeta {
            rows: 1,
            cols: 1,
            epsilon: 1,
            min_pts: 2,
            builder: BuilderKind::Custom,
            orientation: Orientation::Columns,
            partition: None,
        };
        let neurons = vec![
            Neuron {
                id: 0,
                threshold: 1,
                is_input: true,
                is_output: false,
                role: RoleTag::cell(Collection::Input, 0, 0),
            },
            Neuron {
                id: 1,
                threshold: 1,
                is_input: false,
                is_output: true,
                role: RoleTag::cell(Collection::Core, 0, 0),
            },
        ];
        let a = Synapse { from: 0, to: 1, weight: 1, delay: 1 };
        let b = Synapse { from: 0, to: 1, weight: 1, delay: 2 };
        let n1 = Network::new(meta, neurons.clone(), vec![a, b]).unwrap();
        let n2 = Network::new(meta, neurons, vec![b, a]).unwrap();
        assert_eq!(serialize(&n1), serialize(&n2));
    }
}
