//! Rare sets represented by finitely many supporting directions.
//!
//! A set is stored as `A = {y : max_p p·y > 1}` with every `p` non-negative.
//! Such a set is open and increasing, its complement is an intersection of
//! half-spaces (hence convex), and the origin stays outside its closure. The
//! scale `x` of a query `z ∈ xA` is carried by the caller, so the projection
//! functional `z ↦ max_p p·z` is exactly homogeneous.

use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};

const WEIGHT_SUM_TOL: f64 = 1e-9;
const ALLOCATION_SUM_TOL: f64 = 1e-12;

/// A non-negative weight vector `p` with at least one positive entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Direction(Vec<f64>);

impl Direction {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(input("direction has no coordinates"));
        }
        if coords.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(input(format!("direction {coords:?} has a negative or non-finite coordinate")));
        }
        if coords.iter().all(|c| *c == 0.0) {
            return Err(input("direction is identically zero"));
        }
        Ok(Self(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn dot(&self, z: &[f64]) -> f64 {
        self.0.iter().zip(z).map(|(p, z)| p * z).sum()
    }
}

/// A member of the rare-set family, given by its supporting directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RareSet {
    dim: usize,
    directions: Vec<Direction>,
    label: String,
}

impl RareSet {
    pub fn new(directions: Vec<Vec<f64>>, label: impl Into<String>) -> Result<Self> {
        let first = directions.first().ok_or_else(|| input("rare set needs at least one direction"))?;
        let dim = first.len();
        let directions = directions
            .into_iter()
            .map(|d| {
                if d.len() != dim {
                    return Err(input(format!("direction {d:?} has dimension {} but the set has {dim}", d.len())));
                }
                Direction::new(d)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { dim, directions, label: label.into() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn directions(&self) -> &[Direction] {
        &self.directions
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// The set `λA`, i.e. every direction divided by `λ`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(input(format!("scale factor must be positive, got {lambda}")));
        }
        let directions = self
            .directions
            .iter()
            .map(|d| Direction(d.0.iter().map(|p| p / lambda).collect()))
            .collect();
        Ok(Self { dim: self.dim, directions, label: format!("{}*{lambda}", self.label) })
    }

    /// `X_A = max_p p·z` for a non-negative vector `z`.
    pub fn projection(&self, z: &[f64]) -> Result<f64> {
        self.check_point(z)?;
        if let Some(bad) = z.iter().find(|v| !(**v >= 0.0)) {
            return Err(input(format!("point has negative or NaN coordinate {bad}")));
        }
        Ok(self.support(z))
    }

    /// `z ∈ xA`, strict because `A` is open.
    pub fn contains(&self, z: &[f64], x: f64) -> Result<bool> {
        if !(x > 0.0) {
            return Err(input(format!("scale x must be positive, got {x}")));
        }
        Ok(self.projection(z)? > x)
    }

    /// Unchecked `max_p p·z`; also used for surplus deficits with negative
    /// coordinates, where the value may itself be negative.
    #[inline]
    pub fn support(&self, z: &[f64]) -> f64 {
        self.directions.iter().map(|d| d.dot(z)).fold(f64::NEG_INFINITY, f64::max)
    }

    fn check_point(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.dim {
            return Err(input(format!("point has dimension {} but the set has {}", z.len(), self.dim)));
        }
        Ok(())
    }

    /// Checks the family conditions constructively. Never fails.
    pub fn validate(&self) -> ValidationReport {
        validate_directions(self.directions.iter().map(|d| d.0.as_slice()))
    }
}

/// Outcome of [`RareSet::validate`] or [`validate_directions`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub failures: Vec<String>,
}

/// Validates a raw direction list without constructing a [`RareSet`].
pub fn validate_directions<'a>(directions: impl IntoIterator<Item = &'a [f64]>) -> ValidationReport {
    let mut failures = Vec::new();
    let mut dim = None;
    let mut count = 0usize;
    for (i, d) in directions.into_iter().enumerate() {
        count += 1;
        match dim {
            None => dim = Some(d.len()),
            Some(n) if n != d.len() => failures.push(format!("direction {i}: dimension {} differs from {n}", d.len())),
            _ => {}
        }
        if d.is_empty() {
            failures.push(format!("direction {i}: empty"));
        }
        if d.iter().any(|c| !c.is_finite()) {
            failures.push(format!("direction {i}: non-finite coordinate"));
        }
        if d.iter().any(|c| *c < 0.0) {
            failures.push(format!("direction {i}: negative coordinate, set not increasing"));
        } else if d.iter().all(|c| *c == 0.0) {
            failures.push(format!("direction {i}: zero direction contributes nothing"));
        }
    }
    if count == 0 {
        failures.push("no directions: set is empty".to_string());
    }
    ValidationReport { passed: failures.is_empty(), failures }
}

/// `A₁ = {y : y_j > b_j for some j}`.
pub fn preset_a1(b: &[f64]) -> Result<RareSet> {
    if b.is_empty() {
        return Err(input("A1 needs at least one threshold"));
    }
    if let Some(bad) = b.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(input(format!("A1 thresholds must be positive, got {bad}")));
    }
    let d = b.len();
    let dirs = (0..d)
        .map(|j| {
            let mut p = vec![0.0; d];
            p[j] = 1.0 / b[j];
            p
        })
        .collect();
    RareSet::new(dirs, format!("A1(b={b:?})"))
}

/// `A₂ = {y : Σ l_j y_j > b}` with `Σ l_j = 1`.
pub fn preset_a2(l: &[f64], b: f64) -> Result<RareSet> {
    check_weights(l)?;
    if !(b > 0.0 && b.is_finite()) {
        return Err(input(format!("A2 threshold must be positive, got {b}")));
    }
    RareSet::new(vec![l.iter().map(|w| w / b).collect()], format!("A2(l={l:?}, b={b})"))
}

/// `A₃ = {y : (1/d) Σ l_i y_i > 1}`, i.e. `A₂` with threshold `d`.
pub fn preset_a3(l: &[f64]) -> Result<RareSet> {
    let mut set = preset_a2(l, l.len() as f64)?;
    set.label = format!("A3(l={l:?})");
    Ok(set)
}

fn check_weights(l: &[f64]) -> Result<()> {
    if l.is_empty() {
        return Err(input("weight vector is empty"));
    }
    if l.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
        return Err(input(format!("weights must be non-negative, got {l:?}")));
    }
    let sum: f64 = l.iter().sum();
    if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(input(format!("weights must sum to 1, got {sum}")));
    }
    Ok(())
}

/// Which ruin set `L` is used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuinKind {
    /// `L₁`: some line has negative surplus.
    PerLine,
    /// `L₂`: the total surplus is negative.
    Aggregate,
}

/// Ruin set together with the capital allocation `l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuinSetPreset {
    kind: RuinKind,
    allocation: Vec<f64>,
}

impl RuinSetPreset {
    pub fn new(kind: RuinKind, allocation: Vec<f64>) -> Result<Self> {
        if allocation.is_empty() {
            return Err(input("allocation is empty"));
        }
        if let Some(bad) = allocation.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(input(format!("allocation entries must be positive, got {bad}")));
        }
        let sum: f64 = allocation.iter().sum();
        if (sum - 1.0).abs() > ALLOCATION_SUM_TOL {
            return Err(input(format!("allocation must sum to 1, got {sum}")));
        }
        Ok(Self { kind, allocation })
    }

    pub fn kind(&self) -> RuinKind {
        self.kind
    }

    pub fn allocation(&self) -> &[f64] {
        &self.allocation
    }
}

/// The rare set `A = l − L`.
pub fn from_ruin_set(preset: &RuinSetPreset) -> RareSet {
    let l = &preset.allocation;
    let result = match preset.kind {
        // y ∈ l − L₁ ⟺ y_j > l_j for some j
        RuinKind::PerLine => preset_a1(l),
        // y ∈ l − L₂ ⟺ Σ y_j > Σ l_j = 1
        RuinKind::Aggregate => RareSet::new(vec![vec![1.0; l.len()]], "A2(l=1, b=1)"),
    };
    let mut set = result.expect("validated allocation yields a valid set");
    set.label = format!("ruin_{:?}(l={l:?})", preset.kind).to_lowercase();
    set
}

/// Config form: either a named preset or an explicit direction list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum RareSetSpec {
    Preset(PresetSpec),
    Directions { directions: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", deny_unknown_fields)]
pub enum PresetSpec {
    A1 { b: Vec<f64> },
    A2 { l: Vec<f64>, b: f64 },
    A3 { l: Vec<f64> },
    #[serde(rename = "ruin_per_line")]
    RuinPerLine { l: Vec<f64> },
    #[serde(rename = "ruin_aggregate")]
    RuinAggregate { l: Vec<f64> },
}

impl RareSetSpec {
    pub fn build(&self) -> Result<RareSet> {
        match self {
            RareSetSpec::Directions { directions } => {
                let report = validate_directions(directions.iter().map(Vec::as_slice));
                if !report.passed {
                    return Err(Error::Input(format!("rare set rejected: {}", report.failures.join("; "))));
                }
                RareSet::new(directions.clone(), "custom")
            }
            RareSetSpec::Preset(PresetSpec::A1 { b }) => preset_a1(b),
            RareSetSpec::Preset(PresetSpec::A2 { l, b }) => preset_a2(l, *b),
            RareSetSpec::Preset(PresetSpec::A3 { l }) => preset_a3(l),
            RareSetSpec::Preset(PresetSpec::RuinPerLine { l }) => {
                Ok(from_ruin_set(&RuinSetPreset::new(RuinKind::PerLine, l.clone())?))
            }
            RareSetSpec::Preset(PresetSpec::RuinAggregate { l }) => {
                Ok(from_ruin_set(&RuinSetPreset::new(RuinKind::Aggregate, l.clone())?))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dirs(set: &RareSet) -> Vec<Vec<f64>> {
        set.directions().iter().map(|d| d.coords().to_vec()).collect()
    }

    #[test]
    fn projection_examples() {
        let a2 = preset_a2(&[0.5, 0.5], 1.0).unwrap();
        assert_eq!(a2.projection(&[2.0, 4.0]).unwrap(), 3.0);
        let a1 = preset_a1(&[1.0, 2.0]).unwrap();
        assert_eq!(dirs(&a1), vec![vec![1.0, 0.0], vec![0.0, 0.5]]);
        assert_eq!(a1.projection(&[0.8, 3.0]).unwrap(), 1.5);
        assert!(a1.contains(&[0.8, 3.0], 1.4).unwrap());
        assert_eq!(a1.projection(&[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn membership_is_strict() {
        let a2 = preset_a2(&[0.5, 0.5], 1.0).unwrap();
        assert!(a2.contains(&[2.0, 4.0], 2.9).unwrap());
        assert!(!a2.contains(&[2.0, 4.0], 3.0).unwrap());
        assert!(!a2.contains(&[0.0, 0.0], 1e-300).unwrap());
    }

    #[test]
    fn projection_rejects_bad_points() {
        let a2 = preset_a2(&[0.5, 0.5], 1.0).unwrap();
        assert!(matches!(a2.projection(&[1.0]), Err(Error::Input(_))));
        assert!(matches!(a2.projection(&[1.0, -0.1]), Err(Error::Input(_))));
        assert!(a2.contains(&[1.0, 1.0], 0.0).is_err());
    }

    #[test]
    fn presets() {
        assert_eq!(dirs(&preset_a1(&[1.0, 1.0]).unwrap()), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(dirs(&preset_a1(&[2.0, 4.0]).unwrap()), vec![vec![0.5, 0.0], vec![0.0, 0.25]]);
        assert!(preset_a1(&[1.0, 0.0]).is_err());
        assert_eq!(dirs(&preset_a2(&[0.5, 0.5], 1.0).unwrap()), vec![vec![0.5, 0.5]]);
        assert_eq!(dirs(&preset_a2(&[1.0, 0.0], 2.0).unwrap()), vec![vec![0.5, 0.0]]);
        assert!(preset_a2(&[0.5, 0.6], 1.0).is_err());
        assert_eq!(dirs(&preset_a3(&[0.5, 0.5]).unwrap()), vec![vec![0.25, 0.25]]);
    }

    #[test]
    fn ruin_transforms() {
        let per_line = from_ruin_set(&RuinSetPreset::new(RuinKind::PerLine, vec![0.3, 0.7]).unwrap());
        assert_eq!(dirs(&per_line), vec![vec![1.0 / 0.3, 0.0], vec![0.0, 1.0 / 0.7]]);
        assert_eq!(per_line.directions(), preset_a1(&[0.3, 0.7]).unwrap().directions());
        let agg = from_ruin_set(&RuinSetPreset::new(RuinKind::Aggregate, vec![0.3, 0.7]).unwrap());
        assert_eq!(dirs(&agg), vec![vec![1.0, 1.0]]);

        let half = from_ruin_set(&RuinSetPreset::new(RuinKind::PerLine, vec![0.5, 0.5]).unwrap());
        let m = half.projection(&[0.6, 0.0]).unwrap();
        assert!((m - 1.2).abs() < 1e-15);
        assert!(half.contains(&[0.6, 0.0], 1.19).unwrap());
        assert!(!half.contains(&[0.6, 0.0], 1.2).unwrap());
    }

    #[test]
    fn allocation_must_be_positive_and_normalized() {
        assert!(RuinSetPreset::new(RuinKind::PerLine, vec![0.5, 0.5 + 1e-9]).is_err());
        assert!(RuinSetPreset::new(RuinKind::PerLine, vec![1.0, 0.0]).is_err());
        assert!(RuinSetPreset::new(RuinKind::Aggregate, vec![]).is_err());
    }

    #[test]
    fn validation_reports() {
        assert!(preset_a2(&[0.5, 0.5], 1.0).unwrap().validate().passed);
        let bad = validate_directions([[-1.0, 0.0].as_slice()]);
        assert!(!bad.passed);
        assert!(bad.failures[0].contains("not increasing"));
        let empty = validate_directions(std::iter::empty());
        assert!(!empty.passed);
        assert!(RareSet::new(vec![], "x").is_err());
        assert!(RareSet::new(vec![vec![1.0, 0.0], vec![1.0]], "x").is_err());
    }

    #[test]
    fn config_forms() {
        let spec: RareSetSpec = serde_json::from_str(r#"{"preset":"A2","l":[0.5,0.5],"b":1.0}"#).unwrap();
        assert_eq!(spec.build().unwrap().directions(), preset_a2(&[0.5, 0.5], 1.0).unwrap().directions());
        let spec: RareSetSpec = serde_json::from_str(r#"{"directions":[[1,0],[0,2]]}"#).unwrap();
        assert_eq!(spec.build().unwrap().directions().len(), 2);
        let spec: RareSetSpec = serde_json::from_str(r#"{"preset":"ruin_aggregate","l":[0.3,0.7]}"#).unwrap();
        assert_eq!(dirs(&spec.build().unwrap()), vec![vec![1.0, 1.0]]);
        let spec: RareSetSpec = serde_json::from_str(r#"{"directions":[[-1,0]]}"#).unwrap();
        assert!(spec.build().is_err());
        assert!(serde_json::from_str::<RareSetSpec>(r#"{"preset":"A2","l":[1.0],"b":1,"bogus":2}"#).is_err());
    }

    fn set_and_point() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
        (1usize..5).prop_flat_map(|d| {
            (
                prop::collection::vec(prop::collection::vec(0.0f64..10.0, d), 1..6)
                    .prop_filter("non-zero", |v| v.iter().all(|p| p.iter().any(|c| *c > 0.0))),
                prop::collection::vec(0.0f64..100.0, d),
            )
        })
    }

    proptest! {
        #[test]
        fn homogeneity((dirs, z) in set_and_point(), lambda in 1e-3f64..1e3) {
            let set = RareSet::new(dirs, "p").unwrap();
            let scaled: Vec<f64> = z.iter().map(|v| v * lambda).collect();
            let lhs = set.projection(&scaled).unwrap();
            let rhs = lambda * set.projection(&z).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1e-300));
        }

        #[test]
        fn monotone((dirs, z) in set_and_point(), bump in prop::collection::vec(0.0f64..5.0, 5)) {
            let set = RareSet::new(dirs, "p").unwrap();
            let bigger: Vec<f64> = z.iter().zip(&bump).map(|(a, b)| a + b).collect();
            prop_assert!(set.projection(&z).unwrap() <= set.projection(&bigger).unwrap());
        }

        #[test]
        fn brute_force_membership((dirs, z) in set_and_point(), x in 1e-3f64..500.0) {
            let set = RareSet::new(dirs.clone(), "p").unwrap();
            let brute = dirs.iter().any(|p| p.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>() > x);
            prop_assert_eq!(set.contains(&z, x).unwrap(), brute);
        }
    }
}
