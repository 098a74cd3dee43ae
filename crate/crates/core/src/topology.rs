//! Network geometry: node placement under distance constraints.
//!
//! The layout is a single macro cell: one MRRH at the origin with macro
//! users (MUEs) inside its coverage disk, plus F-APs confined to an annulus
//! around the MRRH, each serving F-UEs inside its own small disk. All
//! placement is rejection sampling — uniform draws over the enclosing disk,
//! retried until every distance constraint holds — so the marginal
//! distribution over each feasible region stays exactly uniform. A bounded
//! per-node attempt budget turns an over-constrained geometry into a
//! reportable error instead of a hang.

use rand::Rng;
use thiserror::Error;

/// 2-D position in meters.
pub type Point = [f64; 2];

/// Attempts allowed per node before placement is declared infeasible.
pub const PLACEMENT_ATTEMPT_BUDGET: usize = 100_000;

/// Euclidean distance between two points, meters.
pub fn distance(a: Point, b: Point) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    (dx * dx + dy * dy).sqrt()
}

/// Distance limits and node counts for topology generation.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryConfig {
    /// Coverage radius of the MRRH, meters.
    pub macro_radius: f64,
    /// Serving radius of each F-AP, meters.
    pub fap_radius: f64,
    /// Minimum MRRH-to-F-AP distance, meters.
    pub d_min_mrrh_fap: f64,
    /// Minimum MRRH-to-MUE distance, meters.
    pub d_min_mrrh_mue: f64,
    /// Minimum pairwise F-AP distance, meters.
    pub d_min_fap_fap: f64,
    pub n_faps: usize,
    pub n_fues_per_fap: usize,
    pub n_mues: usize,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            macro_radius: 500.0,
            fap_radius: 10.0,
            d_min_mrrh_fap: 300.0,
            d_min_mrrh_mue: 50.0,
            d_min_fap_fap: 40.0,
            n_faps: 4,
            n_fues_per_fap: 10,
            n_mues: 2,
        }
    }
}

impl GeometryConfig {
    /// Checks the config invariants, naming the offending field on failure.
    pub fn validate(&self) -> Result<(), TopologyError> {
        let positive = [
            ("macro_radius", self.macro_radius),
            ("fap_radius", self.fap_radius),
            ("d_min_mrrh_fap", self.d_min_mrrh_fap),
            ("d_min_mrrh_mue", self.d_min_mrrh_mue),
            ("d_min_fap_fap", self.d_min_fap_fap),
        ];
        for (field, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(TopologyError::InvalidConfig {
                    field,
                    message: format!("must be strictly positive, got {value}"),
                });
            }
        }
        if self.d_min_mrrh_fap >= self.macro_radius {
            return Err(TopologyError::InvalidConfig {
                field: "d_min_mrrh_fap",
                message: format!(
                    "must be smaller than macro_radius ({} >= {})",
                    self.d_min_mrrh_fap, self.macro_radius
                ),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("invalid geometry config field `{field}`: {message}")]
    InvalidConfig {
        field: &'static str,
        message: String,
    },
    /// Rejection sampling exhausted its attempt budget; the geometry is
    /// over-constrained (e.g. too many F-APs for the pairwise separation).
    #[error("could not place {node} within {attempts} attempts; geometry looks over-constrained")]
    Feasibility { node: String, attempts: usize },
}

/// Positions and roles of every node in one network realization.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkTopology {
    pub mrrh_position: Point,
    pub macro_radius: f64,
    pub fap_positions: Vec<Point>,
    pub fap_radius: f64,
    /// Each F-UE as (index of its serving F-AP, position).
    pub fue_positions: Vec<(usize, Point)>,
    pub mue_positions: Vec<Point>,
}

impl NetworkTopology {
    pub fn n_faps(&self) -> usize {
        self.fap_positions.len()
    }

    pub fn n_fues(&self) -> usize {
        self.fue_positions.len()
    }

    pub fn n_mues(&self) -> usize {
        self.mue_positions.len()
    }

    /// Index of the F-AP serving F-UE `fue`.
    pub fn serving_fap(&self, fue: usize) -> usize {
        self.fue_positions[fue].0
    }
}

/// One violated distance constraint, naming the offending node indices.
#[derive(Debug, Clone, PartialEq)]
pub enum TopologyViolation {
    FapOutsideMacro { fap: usize, distance: f64 },
    FapTooCloseToMrrh { fap: usize, distance: f64 },
    FapPairTooClose { a: usize, b: usize, distance: f64 },
    FueOutsideCell { fue: usize, fap: usize, distance: f64 },
    FueBadFapIndex { fue: usize, fap: usize },
    MueOutsideMacro { mue: usize, distance: f64 },
    MueTooCloseToMrrh { mue: usize, distance: f64 },
}

impl std::fmt::Display for TopologyViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::FapOutsideMacro { fap, distance } => {
                write!(f, "F-AP {fap} lies {distance:.2} m from the MRRH, outside macro_radius")
            }
            Self::FapTooCloseToMrrh { fap, distance } => {
                write!(f, "F-AP {fap} lies {distance:.2} m from the MRRH, below d_min_mrrh_fap")
            }
            Self::FapPairTooClose { a, b, distance } => {
                write!(f, "F-APs {a} and {b} are {distance:.2} m apart, below d_min_fap_fap")
            }
            Self::FueOutsideCell { fue, fap, distance } => {
                write!(f, "F-UE {fue} lies {distance:.2} m from its F-AP {fap}, outside fap_radius")
            }
            Self::FueBadFapIndex { fue, fap } => {
                write!(f, "F-UE {fue} references nonexistent F-AP {fap}")
            }
            Self::MueOutsideMacro { mue, distance } => {
                write!(f, "MUE {mue} lies {distance:.2} m from the MRRH, outside macro_radius")
            }
            Self::MueTooCloseToMrrh { mue, distance } => {
                write!(f, "MUE {mue} lies {distance:.2} m from the MRRH, below d_min_mrrh_mue")
            }
        }
    }
}

/// Uniform draw inside the disk of radius `r` centered at `c`.
fn uniform_in_disk<R: Rng + ?Sized>(c: Point, r: f64, rng: &mut R) -> Point {
    let radius = r * rng.gen::<f64>().sqrt();
    let angle = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
    [c[0] + radius * angle.cos(), c[1] + radius * angle.sin()]
}

/// Generates a random topology satisfying every distance constraint.
///
/// Sampling order is fixed (F-APs, then each F-AP's F-UEs, then MUEs), so
/// the result is fully determined by the RNG seed. F-APs are uniform over
/// the annulus between `d_min_mrrh_fap` and `macro_radius`, thinned by the
/// pairwise separation; F-UEs are uniform in their F-AP's disk; MUEs are
/// uniform over the annulus between `d_min_mrrh_mue` and `macro_radius`.
pub fn generate_topology<R: Rng + ?Sized>(
    config: &GeometryConfig,
    rng: &mut R,
) -> Result<NetworkTopology, TopologyError> {
    config.validate()?;
    let mrrh: Point = [0.0, 0.0];

    let mut fap_positions: Vec<Point> = Vec::with_capacity(config.n_faps);
    for i in 0..config.n_faps {
        let mut placed = false;
        for _ in 0..PLACEMENT_ATTEMPT_BUDGET {
            let p = uniform_in_disk(mrrh, config.macro_radius, rng);
            if distance(p, mrrh) < config.d_min_mrrh_fap {
                continue;
            }
            if fap_positions
                .iter()
                .any(|&f| distance(p, f) < config.d_min_fap_fap)
            {
                continue;
            }
            fap_positions.push(p);
            placed = true;
            break;
        }
        if !placed {
            return Err(TopologyError::Feasibility {
                node: format!("F-AP {i}"),
                attempts: PLACEMENT_ATTEMPT_BUDGET,
            });
        }
    }

    let mut fue_positions = Vec::with_capacity(config.n_faps * config.n_fues_per_fap);
    for (k, &fap) in fap_positions.iter().enumerate() {
        for _ in 0..config.n_fues_per_fap {
            fue_positions.push((k, uniform_in_disk(fap, config.fap_radius, rng)));
        }
    }

    let mut mue_positions = Vec::with_capacity(config.n_mues);
    for j in 0..config.n_mues {
        let mut placed = false;
        for _ in 0..PLACEMENT_ATTEMPT_BUDGET {
            let p = uniform_in_disk(mrrh, config.macro_radius, rng);
            if distance(p, mrrh) < config.d_min_mrrh_mue {
                continue;
            }
            mue_positions.push(p);
            placed = true;
            break;
        }
        if !placed {
            return Err(TopologyError::Feasibility {
                node: format!("MUE {j}"),
                attempts: PLACEMENT_ATTEMPT_BUDGET,
            });
        }
    }

    Ok(NetworkTopology {
        mrrh_position: mrrh,
        macro_radius: config.macro_radius,
        fap_positions,
        fap_radius: config.fap_radius,
        fue_positions,
        mue_positions,
    })
}

/// Checks every topology invariant; empty result means the topology is valid.
pub fn validate_topology(
    t: &NetworkTopology,
    config: &GeometryConfig,
) -> Vec<TopologyViolation> {
    let mut violations = Vec::new();

    for (i, &fap) in t.fap_positions.iter().enumerate() {
        let d = distance(fap, t.mrrh_position);
        if d > config.macro_radius {
            violations.push(TopologyViolation::FapOutsideMacro { fap: i, distance: d });
        }
        if d < config.d_min_mrrh_fap {
            violations.push(TopologyViolation::FapTooCloseToMrrh { fap: i, distance: d });
        }
    }
    for a in 0..t.fap_positions.len() {
        for b in (a + 1)..t.fap_positions.len() {
            let d = distance(t.fap_positions[a], t.fap_positions[b]);
            if d < config.d_min_fap_fap {
                violations.push(TopologyViolation::FapPairTooClose { a, b, distance: d });
            }
        }
    }
    for (m, &(k, pos)) in t.fue_positions.iter().enumerate() {
        if k >= t.fap_positions.len() {
            violations.push(TopologyViolation::FueBadFapIndex { fue: m, fap: k });
            continue;
        }
        let d = distance(pos, t.fap_positions[k]);
        if d > config.fap_radius {
            violations.push(TopologyViolation::FueOutsideCell { fue: m, fap: k, distance: d });
        }
    }
    for (j, &mue) in t.mue_positions.iter().enumerate() {
        let d = distance(mue, t.mrrh_position);
        if d > config.macro_radius {
            violations.push(TopologyViolation::MueOutsideMacro { mue: j, distance: d });
        }
        if d < config.d_min_mrrh_mue {
            violations.push(TopologyViolation::MueTooCloseToMrrh { mue: j, distance: d });
        }
    }

    violations
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn distance_basics() {
        assert_eq!(distance([0.0, 0.0], [0.0, 0.0]), 0.0);
        assert_eq!(distance([0.0, 0.0], [3.0, 4.0]), 5.0);
        assert_eq!(distance([0.0, 0.0], [300.0, 0.0]), 300.0);
        // symmetry
        assert_eq!(distance([1.0, 2.0], [-3.0, 7.5]), distance([-3.0, 7.5], [1.0, 2.0]));
    }

    #[test]
    fn generated_topology_is_valid() {
        let config = GeometryConfig::default();
        let t = generate_topology(&config, &mut rng(1)).unwrap();
        assert_eq!(t.n_faps(), 4);
        assert_eq!(t.n_fues(), 40);
        assert_eq!(t.n_mues(), 2);
        assert!(validate_topology(&t, &config).is_empty());
    }

    #[test]
    fn generated_topology_is_valid_for_many_seeds() {
        let config = GeometryConfig::default();
        for seed in 0..200 {
            let t = generate_topology(&config, &mut rng(seed)).unwrap();
            assert!(
                validate_topology(&t, &config).is_empty(),
                "violations at seed {seed}"
            );
        }
    }

    #[test]
    fn empty_fap_case() {
        let config = GeometryConfig {
            n_faps: 0,
            ..GeometryConfig::default()
        };
        let t = generate_topology(&config, &mut rng(7)).unwrap();
        assert!(t.fap_positions.is_empty());
        assert!(t.fue_positions.is_empty());
        assert_eq!(t.n_mues(), 2);
        assert!(validate_topology(&t, &config).is_empty());
    }

    #[test]
    fn overpacked_annulus_is_infeasible() {
        // Random sequential placement of 40 m exclusion disks jams the
        // 300..500 m annulus near 240 nodes under this attempt budget;
        // 260 cannot be reached.
        let config = GeometryConfig {
            n_faps: 260,
            n_fues_per_fap: 0,
            n_mues: 0,
            ..GeometryConfig::default()
        };
        match generate_topology(&config, &mut rng(1)) {
            Err(TopologyError::Feasibility { attempts, .. }) => {
                assert_eq!(attempts, PLACEMENT_ATTEMPT_BUDGET);
            }
            other => panic!("expected feasibility error, got {:?}", other.map(|t| t.n_faps())),
        }
    }

    #[test]
    fn invalid_config_rejected() {
        let config = GeometryConfig {
            d_min_mrrh_fap: 600.0,
            ..GeometryConfig::default()
        };
        assert!(matches!(
            generate_topology(&config, &mut rng(0)),
            Err(TopologyError::InvalidConfig { field: "d_min_mrrh_fap", .. })
        ));

        let config = GeometryConfig {
            macro_radius: 0.0,
            ..GeometryConfig::default()
        };
        assert!(matches!(
            config.validate(),
            Err(TopologyError::InvalidConfig { field: "macro_radius", .. })
        ));
    }

    #[test]
    fn same_seed_reproduces_bitwise() {
        let config = GeometryConfig::default();
        let a = generate_topology(&config, &mut rng(42)).unwrap();
        let b = generate_topology(&config, &mut rng(42)).unwrap();
        assert_eq!(a, b);
        let c = generate_topology(&config, &mut rng(43)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn constructed_violations_are_reported() {
        let config = GeometryConfig::default();
        let t = NetworkTopology {
            mrrh_position: [0.0, 0.0],
            macro_radius: 500.0,
            fap_positions: vec![[350.0, 0.0], [350.0, 30.0]],
            fap_radius: 10.0,
            fue_positions: vec![(0, [362.0, 0.0])],
            mue_positions: vec![],
        };
        let violations = validate_topology(&t, &config);
        assert_eq!(violations.len(), 2);
        assert!(violations.contains(&TopologyViolation::FapPairTooClose {
            a: 0,
            b: 1,
            distance: 30.0
        }));
        assert!(violations
            .iter()
            .any(|v| matches!(v, TopologyViolation::FueOutsideCell { fue: 0, fap: 0, .. })));
    }

    #[test]
    fn mue_constraints_checked() {
        let config = GeometryConfig::default();
        let t = NetworkTopology {
            mrrh_position: [0.0, 0.0],
            macro_radius: 500.0,
            fap_positions: vec![],
            fap_radius: 10.0,
            fue_positions: vec![],
            mue_positions: vec![[10.0, 0.0], [600.0, 0.0]],
        };
        let violations = validate_topology(&t, &config);
        assert!(violations.contains(&TopologyViolation::MueTooCloseToMrrh {
            mue: 0,
            distance: 10.0
        }));
        assert!(violations.contains(&TopologyViolation::MueOutsideMacro {
            mue: 1,
            distance: 600.0
        }));
    }

    /// Single F-AP placement must follow the uniform-annulus radial CDF
    /// F(r) = (r^2 - r0^2) / (R^2 - r0^2).
    #[test]
    fn fap_radius_matches_annulus_cdf() {
        let config = GeometryConfig {
            n_faps: 1,
            n_fues_per_fap: 0,
            n_mues: 0,
            ..GeometryConfig::default()
        };
        let n = 10_000;
        let mut radii: Vec<f64> = (0..n)
            .map(|seed| {
                let t = generate_topology(&config, &mut rng(seed)).unwrap();
                distance(t.fap_positions[0], t.mrrh_position)
            })
            .collect();
        radii.sort_by(|a, b| a.partial_cmp(b).unwrap());

        let (r0, r1) = (config.d_min_mrrh_fap, config.macro_radius);
        let cdf = |r: f64| (r * r - r0 * r0) / (r1 * r1 - r0 * r0);
        let mut ks: f64 = 0.0;
        for (i, &r) in radii.iter().enumerate() {
            let f = cdf(r);
            ks = ks.max((f - i as f64 / n as f64).abs());
            ks = ks.max((f - (i + 1) as f64 / n as f64).abs());
        }
        assert!(ks < 0.02, "KS distance {ks} exceeds 0.02");
    }
}
