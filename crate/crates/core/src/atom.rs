//! Multilevel atom: levels, dipole matrix elements and the per-transition
//! weights that enter the rate formulas.
//!
//! Energies are natural units (inverse length, ħ = c = 1) and dipole
//! components are lengths, ordered (x, y, z) with z normal to the plane and x
//! along the direction of motion.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used when checking that an explicitly declared reverse
/// dipole element is the conjugate of its partner.
const HERMITICITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub id: String,
    pub energy: f64,
}

/// Matrix element `<from| r |to>`. The reverse element is implied by
/// conjugation.
#[derive(Debug, Clone, PartialEq)]
pub struct DipoleElement {
    pub from: String,
    pub to: String,
    pub vector: [Complex64; 3],
}

impl DipoleElement {
    pub fn real(from: &str, to: &str, v: [f64; 3]) -> Self {
        Self {
            from: from.to_string(),
            to: to.to_string(),
            vector: v.map(|x| Complex64::new(x, 0.0)),
        }
    }

    fn is_zero(&self) -> bool {
        self.vector.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AtomSpec {
    pub name: String,
    pub levels: Vec<Level>,
    pub dipoles: Vec<DipoleElement>,
    pub initial_state: String,
}

/// One term of the sum over intermediate states `d` for an atom in state `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    /// The intermediate level `d`.
    pub partner: String,
    /// `ω_b − ω_d`; positive for de-excitation, negative for excitation.
    pub omega: f64,
    /// `P_ij = Re(<b|r_i|d><d|r_j|b>)`, length².
    pub polarization: [[f64; 3]; 3],
}

impl Transition {
    pub fn trace(&self) -> f64 {
        (0..3).map(|i| self.polarization[i][i]).sum()
    }
}

/// Which level of a two-level atom is occupied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TwoLevelState {
    Ground,
    Excited,
}

impl AtomSpec {
    /// Two-level atom with levels `g` (energy 0) and `e` (energy `omega`)
    /// and `<e|r|g> = dipole`.
    pub fn two_level(omega: f64, dipole: [Complex64; 3], state: TwoLevelState) -> Self {
        Self {
            name: "two-level".to_string(),
            levels: vec![
                Level { id: "e".into(), energy: omega },
                Level { id: "g".into(), energy: 0.0 },
            ],
            dipoles: vec![DipoleElement {
                from: "e".into(),
                to: "g".into(),
                vector: dipole,
            }],
            initial_state: match state {
                TwoLevelState::Ground => "g".into(),
                TwoLevelState::Excited => "e".into(),
            },
        }
    }

    pub fn two_level_real(omega: f64, dipole: [f64; 3], state: TwoLevelState) -> Self {
        Self::two_level(omega, dipole.map(|x| Complex64::new(x, 0.0)), state)
    }

    pub fn level(&self, id: &str) -> Option<&Level> {
        self.levels.iter().find(|l| l.id == id)
    }

    /// Level with the lowest energy (first by id on ties).
    pub fn ground_state(&self) -> Option<&Level> {
        let mut sorted: Vec<&Level> = self.levels.iter().collect();
        sorted.sort_by(|a, b| a.id.cmp(&b.id));
        sorted
            .into_iter()
            .min_by(|a, b| a.energy.total_cmp(&b.energy))
    }

    /// Copy with every level energy multiplied by `factor`.
    pub fn scale_energies(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for l in &mut out.levels {
            l.energy *= factor;
        }
        out
    }

    /// Copy with every dipole element multiplied by `factor`.
    pub fn scale_dipoles(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for d in &mut out.dipoles {
            for c in &mut d.vector {
                *c *= factor;
            }
        }
        out
    }

    pub fn with_initial_state(&self, id: &str) -> Self {
        let mut out = self.clone();
        out.initial_state = id.to_string();
        out
    }

    /// `<b| r |d>` if a dipole element connects the two levels.
    pub fn matrix_element(&self, b: &str, d: &str) -> Option<[Complex64; 3]> {
        self.dipoles.iter().find_map(|el| {
            if el.from == b && el.to == d {
                Some(el.vector)
            } else if el.from == d && el.to == b {
                Some(el.vector.map(|c| c.conj()))
            } else {
                None
            }
        })
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: AtomFile = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        Ok(file.into())
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&AtomFile::from(self)).expect("atom file serializes")
    }
}

/// Returns every invariant violation of `spec`; an empty list means valid.
pub fn validate(spec: &AtomSpec) -> Vec<String> {
    let mut out = Vec::new();

    let mut seen = BTreeSet::new();
    for l in &spec.levels {
        if !seen.insert(l.id.as_str()) {
            out.push(format!("duplicate level id `{}`", l.id));
        }
        if !l.energy.is_finite() {
            out.push(format!("level `{}` has non-finite energy {}", l.id, l.energy));
        }
    }
    if spec.level(&spec.initial_state).is_none() {
        out.push(format!(
            "initial_state `{}` is not among the levels",
            spec.initial_state
        ));
    }

    // Unordered pair -> index of the first element declared for it.
    let mut pairs: HashMap<(&str, &str), usize> = HashMap::new();
    for (idx, el) in spec.dipoles.iter().enumerate() {
        for end in [&el.from, &el.to] {
            if spec.level(end).is_none() {
                out.push(format!(
                    "dipole {}->{} references unknown level `{}`",
                    el.from, el.to, end
                ));
            }
        }
        if el.from == el.to {
            out.push(format!("dipole {}->{} connects a level to itself", el.from, el.to));
            continue;
        }
        if el.vector.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            out.push(format!("dipole {}->{} has non-finite components", el.from, el.to));
        }
        let key = if el.from < el.to {
            (el.from.as_str(), el.to.as_str())
        } else {
            (el.to.as_str(), el.from.as_str())
        };
        match pairs.get(&key) {
            None => {
                pairs.insert(key, idx);
            }
            Some(&first) => {
                let prev = &spec.dipoles[first];
                if prev.from == el.from {
                    out.push(format!("dipole {}->{} declared more than once", el.from, el.to));
                } else if !is_conjugate(&prev.vector, &el.vector) {
                    out.push(format!(
                        "dipole {}->{} is not the complex conjugate of {}->{} (Hermiticity)",
                        el.from, el.to, prev.from, prev.to
                    ));
                }
            }
        }
    }
    out
}

fn is_conjugate(a: &[Complex64; 3], b: &[Complex64; 3]) -> bool {
    let scale = a.iter().chain(b.iter()).map(|c| c.norm()).fold(0.0, f64::max);
    a.iter()
        .zip(b.iter())
        .all(|(x, y)| (x.conj() - y).norm() <= HERMITICITY_TOL * scale.max(f64::MIN_POSITIVE))
}

pub(crate) fn ensure_valid(spec: &AtomSpec) -> Result<()> {
    let violations = validate(spec);
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidSpec(violations))
    }
}

/// One `Transition` per level `d ≠ b` with a nonzero dipole to `b`, ordered
/// by level id.
pub fn transitions_from(spec: &AtomSpec, b: &str) -> Result<Vec<Transition>> {
    ensure_valid(spec)?;
    let level_b = spec
        .level(b)
        .ok_or_else(|| Error::UnknownLevel(b.to_string()))?;

    let mut partners: BTreeMap<&str, &Level> = BTreeMap::new();
    for l in &spec.levels {
        if l.id != b {
            partners.insert(l.id.as_str(), l);
        }
    }

    let mut out = Vec::new();
    for (id, level_d) in partners {
        let Some(m) = spec.matrix_element(b, id) else {
            continue;
        };
        if spec
            .dipoles
            .iter()
            .filter(|el| (el.from == b && el.to == id) || (el.from == id && el.to == b))
            .all(DipoleElement::is_zero)
        {
            continue;
        }
        out.push(Transition {
            partner: id.to_string(),
            omega: level_b.energy - level_d.energy,
            polarization: polarization_tensor(&m),
        });
    }
    Ok(out)
}

/// `P_ij = Re(m_i conj(m_j))` for `m = <b|r|d>`.
pub fn polarization_tensor(m: &[Complex64; 3]) -> [[f64; 3]; 3] {
    let mut p = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            p[i][j] = (m[i] * m[j].conj()).re;
        }
    }
    p
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AtomFile {
    name: String,
    levels: Vec<Level>,
    dipoles: Vec<DipoleRecord>,
    initial_state: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DipoleRecord {
    from: String,
    to: String,
    re: [f64; 3],
    #[serde(default)]
    im: [f64; 3],
}

impl From<AtomFile> for AtomSpec {
    fn from(f: AtomFile) -> Self {
        AtomSpec {
            name: f.name,
            levels: f.levels,
            dipoles: f
                .dipoles
                .into_iter()
                .map(|d| DipoleElement {
                    from: d.from,
                    to: d.to,
                    vector: [0, 1, 2].map(|k| Complex64::new(d.re[k], d.im[k])),
                })
                .collect(),
            initial_state: f.initial_state,
        }
    }
}

impl From<&AtomSpec> for AtomFile {
    fn from(s: &AtomSpec) -> Self {
        AtomFile {
            name: s.name.clone(),
            levels: s.levels.clone(),
            dipoles: s
                .dipoles
                .iter()
                .map(|d| DipoleRecord {
                    from: d.from.clone(),
                    to: d.to.clone(),
                    re: d.vector.map(|c| c.re),
                    im: d.vector.map(|c| c.im),
                })
                .collect(),
            initial_state: s.initial_state.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z_atom(state: TwoLevelState) -> AtomSpec {
        AtomSpec::two_level_real(1.0, [0.0, 0.0, 0.5], state)
    }

    #[test]
    fn two_level_is_valid() {
        assert!(validate(&z_atom(TwoLevelState::Excited)).is_empty());
    }

    #[test]
    fn explicit_conjugate_partner_is_accepted() {
        let mut spec = AtomSpec::two_level(
            1.0,
            [Complex64::new(0.1, 0.2), Complex64::new(0.0, 0.0), Complex64::new(0.5, -0.3)],
            TwoLevelState::Excited,
        );
        let rev = spec.dipoles[0].vector.map(|c| c.conj());
        spec.dipoles.push(DipoleElement { from: "g".into(), to: "e".into(), vector: rev });
        assert!(validate(&spec).is_empty(), "{:?}", validate(&spec));
    }

    #[test]
    fn wrong_sign_reverse_is_one_hermiticity_violation() {
        let mut spec = z_atom(TwoLevelState::Excited);
        spec.dipoles.push(DipoleElement::real("g", "e", [0.0, 0.0, -0.5]));
        let v = validate(&spec);
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(v[0].contains("Hermiticity"));
    }

    #[test]
    fn missing_initial_state_is_reported() {
        let spec = z_atom(TwoLevelState::Excited).with_initial_state("nope");
        let v = validate(&spec);
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(v[0].contains("initial_state"));
    }

    #[test]
    fn other_violations() {
        let mut spec = z_atom(TwoLevelState::Excited);
        spec.levels.push(Level { id: "e".into(), energy: f64::NAN });
        spec.dipoles.push(DipoleElement::real("e", "x", [1.0, 0.0, 0.0]));
        spec.dipoles.push(DipoleElement::real("g", "g", [1.0, 0.0, 0.0]));
        let v = validate(&spec);
        assert_eq!(v.len(), 4, "{v:?}");
    }

    #[test]
    fn transition_signs_follow_occupied_level() {
        let g = transitions_from(&z_atom(TwoLevelState::Ground), "g").unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].omega, -1.0);
        let e = transitions_from(&z_atom(TwoLevelState::Excited), "e").unwrap();
        assert_eq!(e[0].omega, 1.0);
        assert_eq!(e[0].polarization, g[0].polarization);
    }

    #[test]
    fn real_z_dipole_gives_diagonal_tensor() {
        let r = 0.5;
        let t = transitions_from(&z_atom(TwoLevelState::Excited), "e").unwrap();
        let p = t[0].polarization;
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == 2 && j == 2 { r * r } else { 0.0 };
                assert_eq!(p[i][j], expect);
            }
        }
    }

    #[test]
    fn unknown_level_is_an_error() {
        let err = transitions_from(&z_atom(TwoLevelState::Excited), "q").unwrap_err();
        assert!(matches!(err, Error::UnknownLevel(_)));
    }

    #[test]
    fn json_round_trip_and_unknown_keys() {
        let text = r#"{
            "name": "h", "initial_state": "e",
            "levels": [{"id": "g", "energy": 0.0}, {"id": "e", "energy": 1.0}],
            "dipoles": [{"from": "e", "to": "g", "re": [0.1, 0.0, 0.2], "im": [0.0, 0.3, 0.0]}]
        }"#;
        let spec = AtomSpec::from_json_str(text).unwrap();
        assert!(validate(&spec).is_empty());
        let back = AtomSpec::from_json_str(&spec.to_json_string()).unwrap();
        assert_eq!(back, spec);

        let bad = text.replace("\"name\"", "\"colour\": 1, \"name\"");
        assert!(matches!(AtomSpec::from_json_str(&bad), Err(Error::Parse(_))));
    }
}
