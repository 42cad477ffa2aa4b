//! JSON file formats for processes, games, instruments and probability tables.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::causality::ProbabilityTable;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};
use crate::operator::{HermitianOp, PauliString, Subsystem};
use crate::process::{PartyStructure, ProcessMatrix, AI, AIP, AO, BI, BIP, BO};
use crate::seesaw::{GameFunctional, Instrument, Party};

/// Parses JSON, reporting the line and column of malformed input.
pub fn parse_json<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| {
        let msg = e.to_string();
        let msg = msg.split(" at line ").next().unwrap_or(&msg).to_string();
        Error::Format(format!("{what}: line {}, column {}: {msg}", e.line(), e.column()))
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixFormat {
    Pauli,
    Dense,
}

impl std::str::FromStr for MatrixFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pauli" => Ok(Self::Pauli),
            "dense" => Ok(Self::Dense),
            _ => Err(Error::Config(format!("unknown format `{s}` (expected pauli or dense)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliEntry {
    pub term: String,
    pub coeff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessFile {
    pub dims: BTreeMap<String, usize>,
    pub format: MatrixFormat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pauli_coeffs: Option<Vec<PauliEntry>>,
    /// Row-major `[re, im]` entries.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dense: Option<Vec<[f64; 2]>>,
}

fn dense_entries(m: &CMatrix) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(m.len());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            out.push([m[(r, c)].re, m[(r, c)].im]);
        }
    }
    out
}

fn dense_matrix(entries: &[[f64; 2]], side: usize, what: &str) -> Result<CMatrix> {
    if entries.len() != side * side {
        return Err(Error::Format(format!("{what}: expected {} dense entries, found {}", side * side, entries.len())));
    }
    if entries.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Format(format!("{what}: dense entries must be finite")));
    }
    Ok(CMatrix::from_fn(side, side, |r, c| {
        let [re, im] = entries[r * side + c];
        C64::new(re, im)
    }))
}

impl ProcessFile {
    pub fn from_process(w: &ProcessMatrix, format: MatrixFormat) -> Result<Self> {
        let dims = w.structure().subsystems().iter().map(|s| (s.label().to_string(), s.dim())).collect();
        match format {
            MatrixFormat::Pauli => {
                let terms = w.op().pauli_decompose()?;
                let pauli_coeffs = terms.iter().map(|t| PauliEntry { term: t.word(), coeff: t.coefficient }).collect();
                Ok(Self { dims, format, pauli_coeffs: Some(pauli_coeffs), dense: None })
            }
            MatrixFormat::Dense => Ok(Self { dims, format, pauli_coeffs: None, dense: Some(dense_entries(w.matrix())) }),
        }
    }

    pub fn structure(&self) -> Result<PartyStructure> {
        let get = |l: &str| -> Result<Subsystem> {
            let d = *self.dims.get(l).ok_or_else(|| Error::Format(format!("dims: missing `{l}`")))?;
            Subsystem::new(l, d)
        };
        if let Some(k) = self.dims.keys().find(|k| ![AI, AO, BI, BO, AIP, BIP].contains(&k.as_str())) {
            return Err(Error::Format(format!("dims: unknown subsystem `{k}`")));
        }
        let mut subs = vec![get(AI)?, get(AO)?, get(BI)?, get(BO)?];
        match (self.dims.contains_key(AIP), self.dims.contains_key(BIP)) {
            (false, false) => {}
            (true, true) => subs.extend([get(AIP)?, get(BIP)?]),
            _ => return Err(Error::Format(format!("dims: `{AIP}` and `{BIP}` must appear together"))),
        }
        PartyStructure::from_subsystems(&subs)
    }

    /// Operator in canonical order; validity is not checked.
    pub fn operator(&self) -> Result<HermitianOp> {
        let s = self.structure()?;
        let subs = s.subsystems();
        match (self.format, &self.pauli_coeffs, &self.dense) {
            (MatrixFormat::Pauli, Some(terms), None) => {
                if subs.iter().any(|x| x.dim() != 2) {
                    return Err(Error::Format("pauli format requires qubit subsystems".into()));
                }
                let parsed: Vec<PauliString> = terms
                    .iter()
                    .enumerate()
                    .map(|(i, e)| {
                        let p: PauliString = e.term.parse().map_err(|err| Error::Format(format!("pauli_coeffs[{i}]: {err}")))?;
                        if p.letters.len() != subs.len() {
                            return Err(Error::Format(format!(
                                "pauli_coeffs[{i}]: term `{}` has {} letters, expected {}",
                                e.term,
                                p.letters.len(),
                                subs.len()
                            )));
                        }
                        if !e.coeff.is_finite() {
                            return Err(Error::Format(format!("pauli_coeffs[{i}]: coefficient must be finite")));
                        }
                        Ok(PauliString::new(p.letters, e.coeff))
                    })
                    .collect::<Result<_>>()?;
                HermitianOp::pauli_compose(subs, &parsed)
            }
            (MatrixFormat::Dense, None, Some(entries)) => {
                HermitianOp::new(subs, dense_matrix(entries, s.side(), "dense")?)
            }
            _ => Err(Error::Format("exactly one of `pauli_coeffs` and `dense`, matching `format`, must be present".into())),
        }
    }

    pub fn to_process(&self, allow_invalid: bool) -> Result<ProcessMatrix> {
        let s = self.structure()?;
        let op = self.operator()?;
        if allow_invalid {
            ProcessMatrix::new_unchecked(s, op)
        } else {
            ProcessMatrix::new(s, op)
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        parse_json(text, "process file")
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// `{"settings":[nx,ny],"outcomes":[na,nb],"coeffs":[[a,b,x,y,c],...],"bound":β}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameFile {
    pub settings: [usize; 2],
    pub outcomes: [usize; 2],
    pub coeffs: Vec<[f64; 5]>,
    pub bound: f64,
}

fn sparse_index(entry: &[f64; 5], dims: [usize; 4], i: usize, what: &str) -> Result<[usize; 4]> {
    let mut idx = [0usize; 4];
    for k in 0..4 {
        let v = entry[k];
        if v < 0.0 || v.fract() != 0.0 || v as usize >= dims[k] {
            return Err(Error::Format(format!("{what}[{i}]: index {v} out of range 0..{}", dims[k])));
        }
        idx[k] = v as usize;
    }
    Ok(idx)
}

impl GameFile {
    pub fn from_game(g: &GameFunctional) -> Self {
        let mut coeffs = Vec::new();
        for x in 0..g.nx {
            for y in 0..g.ny {
                for a in 0..g.na {
                    for b in 0..g.nb {
                        let c = g.coeff(a, b, x, y);
                        if c != 0.0 {
                            coeffs.push([a as f64, b as f64, x as f64, y as f64, c]);
                        }
                    }
                }
            }
        }
        Self { settings: [g.nx, g.ny], outcomes: [g.na, g.nb], coeffs, bound: g.bound }
    }

    pub fn to_game(&self) -> Result<GameFunctional> {
        let [nx, ny] = self.settings;
        let [na, nb] = self.outcomes;
        let mut g = GameFunctional { nx, ny, na, nb, coeffs: vec![0.0; nx * ny * na * nb], bound: self.bound };
        for (i, e) in self.coeffs.iter().enumerate() {
            let [a, b, x, y] = sparse_index(e, [na, nb, nx, ny], i, "coeffs")?;
            let k = g.index(a, b, x, y);
            g.coeffs[k] += e[4];
        }
        g.validate()?;
        Ok(g)
    }

    pub fn parse(text: &str) -> Result<Self> {
        parse_json(text, "game file")
    }
}

/// `{"settings":[nx,ny],"outcomes":[na,nb],"p":[[a,b,x,y,p],...]}`; absent entries are zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableFile {
    pub settings: [usize; 2],
    pub outcomes: [usize; 2],
    pub p: Vec<[f64; 5]>,
}

impl TableFile {
    pub fn from_table(t: &ProbabilityTable) -> Self {
        let mut p = Vec::new();
        for x in 0..t.nx {
            for y in 0..t.ny {
                for a in 0..t.na {
                    for b in 0..t.nb {
                        p.push([a as f64, b as f64, x as f64, y as f64, t.get(a, b, x, y)]);
                    }
                }
            }
        }
        Self { settings: [t.nx, t.ny], outcomes: [t.na, t.nb], p }
    }

    pub fn to_table(&self) -> Result<ProbabilityTable> {
        let [nx, ny] = self.settings;
        let [na, nb] = self.outcomes;
        let mut v = vec![0.0; nx * ny * na * nb];
        for (i, e) in self.p.iter().enumerate() {
            let [a, b, x, y] = sparse_index(e, [na, nb, nx, ny], i, "p")?;
            v[((x * ny + y) * na + a) * nb + b] += e[4];
        }
        let t = ProbabilityTable::new(nx, ny, na, nb, v)?;
        t.validate(1e-9)?;
        Ok(t)
    }

    pub fn parse(text: &str) -> Result<Self> {
        parse_json(text, "table file")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceEntry {
    pub label: String,
    pub dim: usize,
}

/// Instrument with `ops[x][a]` as row-major `[re, im]` lists.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstrumentFile {
    pub party: Party,
    pub spaces: Vec<SpaceEntry>,
    pub ops: Vec<Vec<Vec<[f64; 2]>>>,
}

impl InstrumentFile {
    pub fn from_instrument(inst: &Instrument) -> Self {
        Self {
            party: inst.party,
            spaces: inst.spaces.iter().map(|s| SpaceEntry { label: s.label().to_string(), dim: s.dim() }).collect(),
            ops: inst.ops.iter().map(|o| o.iter().map(dense_entries).collect()).collect(),
        }
    }

    pub fn to_instrument(&self) -> Result<Instrument> {
        let spaces: Vec<Subsystem> = self.spaces.iter().map(|s| Subsystem::new(&s.label, s.dim)).collect::<Result<_>>()?;
        let side: usize = spaces.iter().map(|s| s.dim()).product();
        let ops = self
            .ops
            .iter()
            .enumerate()
            .map(|(x, outs)| {
                outs.iter()
                    .enumerate()
                    .map(|(a, e)| dense_matrix(e, side, &format!("ops[{x}][{a}]")))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        Instrument::new(self.party, spaces, ops)
    }

    pub fn parse(text: &str) -> Result<Self> {
        parse_json(text, "instrument file")
    }
}

/// A pair of instruments, as written by the see-saw.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyFile {
    pub alice: InstrumentFile,
    pub bob: InstrumentFile,
}

impl StrategyFile {
    pub fn parse(text: &str) -> Result<Self> {
        parse_json(text, "strategy file")
    }

    pub fn instruments(&self) -> Result<(Instrument, Instrument)> {
        let (a, b) = (self.alice.to_instrument()?, self.bob.to_instrument()?);
        if a.party != Party::Alice || b.party != Party::Bob {
            return Err(Error::Format("strategy file: parties must be alice then bob".into()));
        }
        Ok((a, b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::{make_named, FamilyParams, NamedProcess};
    use crate::seesaw::random_instrument;

    #[test]
    fn process_round_trip() {
        let w = make_named(NamedProcess::Wopt, &FamilyParams::default()).unwrap();
        for f in [MatrixFormat::Pauli, MatrixFormat::Dense] {
            let text = ProcessFile::from_process(&w, f).unwrap().to_json().unwrap();
            let back = ProcessFile::parse(&text).unwrap().to_process(false).unwrap();
            assert!(back.op().distance(w.op()).unwrap() < 1e-15);
        }
    }

    #[test]
    fn malformed_input_reports_location() {
        let err = ProcessFile::parse("{\n  \"dims\": {\"AI\": 2,\n  oops }").unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
        let bad = r#"{"dims":{"AI":2,"AO":2,"BI":2,"BO":2},"format":"pauli","pauli_coeffs":[{"term":"IIQI","coeff":1}]}"#;
        assert!(ProcessFile::parse(bad).unwrap().operator().is_err());
        let both = r#"{"dims":{"AI":2,"AO":2,"BI":2,"BO":2},"format":"pauli"}"#;
        assert!(ProcessFile::parse(both).unwrap().operator().is_err());
    }

    #[test]
    fn gyni_round_trip() {
        let g = GameFunctional::gyni();
        let text = serde_json::to_string(&GameFile::from_game(&g)).unwrap();
        assert_eq!(GameFile::parse(&text).unwrap().to_game().unwrap(), g);
    }

    #[test]
    fn instrument_round_trip() {
        let s = PartyStructure::qubits();
        let inst = random_instrument(Party::Bob, 2, 2, &s.bob(), 4).unwrap();
        let text = serde_json::to_string(&InstrumentFile::from_instrument(&inst)).unwrap();
        assert_eq!(InstrumentFile::parse(&text).unwrap().to_instrument().unwrap(), inst);
    }
}
