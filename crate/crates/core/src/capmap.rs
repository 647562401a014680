//! Capability maps: for every pre-grasp position in the bin, the fraction
//! of sampled hand orientations the arm can reach without hitting the bin.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{ik, ik_accepting, IkOptions, KinematicChain, Variant};
use crate::pose::Pose;
use crate::scenario::{
    clearance_margin, generate_grid, orientation_samples, BoxGeometry, Capsule, LinkRef,
    ScenarioConfig,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapabilityCell {
    pub ix: usize,
    pub iy: usize,
    pub iz: usize,
    /// mm, arm base frame
    pub position: [f64; 3],
    pub tested: usize,
    pub reachable: usize,
    pub score: f64,
}

impl CapabilityCell {
    fn new(index: [usize; 3], position: [f64; 3], tested: usize, reachable: usize) -> Self {
        Self {
            ix: index[0],
            iy: index[1],
            iz: index[2],
            position,
            tested,
            reachable,
            score: if tested == 0 {
                0.0
            } else {
                reachable as f64 / tested as f64
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub mean_score: f64,
    /// Fraction of cells with every orientation reachable.
    pub fraction_full: f64,
    /// Fraction of cells with no orientation reachable.
    pub fraction_zero: f64,
}

impl Aggregates {
    pub fn from_cells(cells: &[CapabilityCell]) -> Self {
        let n = cells.len().max(1) as f64;
        let sum: f64 = cells.iter().map(|c| c.score).sum();
        let full = cells
            .iter()
            .filter(|c| c.tested > 0 && c.reachable == c.tested)
            .count();
        let zero = cells.iter().filter(|c| c.reachable == 0).count();
        Self {
            mean_score: sum / n,
            fraction_full: full as f64 / n,
            fraction_zero: zero as f64 / n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapabilityGrid {
    /// Scenario digest; absent for grids read back from CSV.
    pub fingerprint: Option<String>,
    pub variant: Option<Variant>,
    /// `[nx, ny, nz]`
    pub shape: [usize; 3],
    pub aggregates: Aggregates,
    /// Grid order, x fastest.
    pub cells: Vec<CapabilityCell>,
}

impl CapabilityGrid {
    pub fn from_cells(
        shape: [usize; 3],
        cells: Vec<CapabilityCell>,
        fingerprint: Option<String>,
        variant: Option<Variant>,
    ) -> Result<Self> {
        let grid = Self {
            fingerprint,
            variant,
            shape,
            aggregates: Aggregates::from_cells(&cells),
            cells,
        };
        grid.check()?;
        Ok(grid)
    }

    /// Checks cell ordering, count consistency and stored aggregates.
    pub fn check(&self) -> Result<()> {
        let [nx, ny, nz] = self.shape;
        if self.cells.len() != nx * ny * nz {
            return Err(Error::Validation(format!(
                "{} cells for a {nx}x{ny}x{nz} grid",
                self.cells.len()
            )));
        }
        for (k, c) in self.cells.iter().enumerate() {
            let expected = [k % nx, (k / nx) % ny, k / (nx * ny)];
            if [c.ix, c.iy, c.iz] != expected {
                return Err(Error::Validation(format!(
                    "cell {k} has indices {:?}, expected {expected:?}",
                    [c.ix, c.iy, c.iz]
                )));
            }
            if c.reachable > c.tested {
                return Err(Error::Validation(format!(
                    "cell {k}: {} reachable of {} tested",
                    c.reachable, c.tested
                )));
            }
            let score = if c.tested == 0 {
                0.0
            } else {
                c.reachable as f64 / c.tested as f64
            };
            if c.score != score {
                return Err(Error::Validation(format!(
                    "cell {k}: score {} != {score}",
                    c.score
                )));
            }
        }
        if Aggregates::from_cells(&self.cells) != self.aggregates {
            return Err(Error::Validation(
                "stored aggregates do not match the cells".into(),
            ));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Cells of one depth layer, row-major in y then x.
    pub fn layer(&self, iz: usize) -> &[CapabilityCell] {
        let per = self.shape[0] * self.shape[1];
        &self.cells[iz * per..(iz + 1) * per]
    }
}

/// Worker count for [`compute_with`]. `None` uses the global pool.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ComputeOptions {
    pub threads: Option<usize>,
}

impl ComputeOptions {
    pub fn serial() -> Self {
        Self { threads: Some(1) }
    }
}

pub fn compute(scenario: &ScenarioConfig) -> Result<CapabilityGrid> {
    compute_with(scenario, ComputeOptions::default())
}

pub fn compute_with(scenario: &ScenarioConfig, options: ComputeOptions) -> Result<CapabilityGrid> {
    let s = &scenario.settings;
    let chain = scenario.chain()?;
    let positions = generate_grid(&s.bin, &s.grid)?;
    let rotations = orientation_samples(&s.orientation)?;
    let capsules: Vec<Capsule> = if s.clearance.enabled {
        s.clearance
            .capsules
            .iter()
            .filter(|c| c.applies_to(chain.variant))
            .cloned()
            .collect()
    } else {
        Vec::new()
    };
    check_capsule_links(&chain, &capsules)?;
    let backoff = s.orientation.axis.direction() * s.orientation.approach_offset;

    let job = CellJob {
        chain: &chain,
        bin: &s.bin,
        capsules: &capsules,
        ik: &s.ik,
        rotations: &rotations,
        backoff,
    };
    let eval = |k: usize| -> CapabilityCell {
        let p = positions[k];
        let reachable = job.reachable_count(k, &p);
        CapabilityCell::new(
            s.grid.indices(k),
            [p.x, p.y, p.z],
            rotations.len(),
            reachable,
        )
    };
    let cells = run_cells(positions.len(), options, eval);
    CapabilityGrid::from_cells(
        [s.grid.nx, s.grid.ny, s.grid.nz],
        cells,
        Some(scenario.fingerprint()),
        Some(chain.variant),
    )
}

#[cfg(feature = "parallel")]
fn run_cells<F>(n: usize, options: ComputeOptions, eval: F) -> Vec<CapabilityCell>
where
    F: Fn(usize) -> CapabilityCell + Sync + Send,
{
    use rayon::prelude::*;
    match options.threads {
        Some(1) => (0..n).map(eval).collect(),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map(|pool| pool.install(|| (0..n).into_par_iter().map(&eval).collect()))
            .unwrap_or_else(|_| (0..n).map(&eval).collect()),
        None => (0..n).into_par_iter().map(eval).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
fn run_cells<F>(n: usize, _options: ComputeOptions, eval: F) -> Vec<CapabilityCell>
where
    F: Fn(usize) -> CapabilityCell,
{
    (0..n).map(eval).collect()
}

fn check_capsule_links(chain: &KinematicChain, capsules: &[Capsule]) -> Result<()> {
    for c in capsules {
        if let LinkRef::Frame(n) = c.link {
            if n > chain.arm_joints {
                return Err(Error::Config(format!(
                    "capsule {} refers to frame {n} of a {}-joint arm",
                    c.name, chain.arm_joints
                )));
            }
        }
    }
    Ok(())
}

struct CellJob<'a> {
    chain: &'a KinematicChain,
    bin: &'a BoxGeometry,
    capsules: &'a [Capsule],
    ik: &'a IkOptions,
    rotations: &'a [nalgebra::UnitQuaternion<f64>],
    backoff: Vector3<f64>,
}

impl CellJob<'_> {
    fn reachable_count(&self, cell: usize, p: &Vector3<f64>) -> usize {
        self.rotations
            .iter()
            .enumerate()
            .filter(|(r, rot)| {
                let target = Pose::new(p - self.backoff, **rot);
                let opts = self.ik.with_seed(target_seed(self.ik.rng_seed, cell, *r));
                let outcome = if self.capsules.is_empty() {
                    ik(self.chain, &target, &opts)
                } else {
                    ik_accepting(self.chain, &target, &opts, |q| {
                        let frames = crate::kinematics::frames_unchecked(self.chain, q);
                        clearance_margin(self.chain, &frames, self.bin, self.capsules)
                            .is_ok_and(|m| m >= 0.0)
                    })
                };
                outcome.map(|o| o.is_solved()).unwrap_or(false)
            })
            .count()
    }
}

/// IK seed for one target, a function of the indices only.
pub fn target_seed(base: u64, cell: usize, rotation: usize) -> u64 {
    fn splitmix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    splitmix(base ^ splitmix(((cell as u64) << 20) ^ rotation as u64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellDelta {
    pub ix: usize,
    pub iy: usize,
    pub iz: usize,
    pub position: [f64; 3],
    pub score_a: f64,
    pub score_b: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantComparison {
    pub deltas: Vec<CellDelta>,
    pub mean_delta: f64,
    pub improved: usize,
    pub unchanged: usize,
    pub worsened: usize,
}

/// Per-cell `a - b`.
pub fn compare(a: &CapabilityGrid, b: &CapabilityGrid) -> Result<VariantComparison> {
    if a.shape != b.shape || a.cells.len() != b.cells.len() {
        return Err(Error::Comparison(format!(
            "grid shapes differ: {:?} vs {:?}",
            a.shape, b.shape
        )));
    }
    if let (Some(fa), Some(fb)) = (&a.fingerprint, &b.fingerprint) {
        if fa != fb {
            return Err(Error::Comparison(format!(
                "scenario fingerprints differ: {}… vs {}…",
                &fa[..12.min(fa.len())],
                &fb[..12.min(fb.len())]
            )));
        }
    }
    let mut deltas = Vec::with_capacity(a.cells.len());
    for (ca, cb) in a.cells.iter().zip(&b.cells) {
        if (ca.ix, ca.iy, ca.iz) != (cb.ix, cb.iy, cb.iz) || ca.position != cb.position {
            return Err(Error::Comparison(format!(
                "cell ({}, {}, {}) sits at different positions",
                ca.ix, ca.iy, ca.iz
            )));
        }
        deltas.push(CellDelta {
            ix: ca.ix,
            iy: ca.iy,
            iz: ca.iz,
            position: ca.position,
            score_a: ca.score,
            score_b: cb.score,
            delta: ca.score - cb.score,
        });
    }
    let improved = deltas.iter().filter(|d| d.delta > 0.0).count();
    let worsened = deltas.iter().filter(|d| d.delta < 0.0).count();
    let mean_delta = deltas.iter().map(|d| d.delta).sum::<f64>() / deltas.len().max(1) as f64;
    Ok(VariantComparison {
        unchanged: deltas.len() - improved - worsened,
        deltas,
        mean_delta,
        improved,
        worsened,
    })
}

impl VariantComparison {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("ix,iy,iz,x_mm,y_mm,z_mm,score_a,score_b,delta\n");
        for d in &self.deltas {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{:.6},{:.6},{:.6}",
                d.ix,
                d.iy,
                d.iz,
                d.position[0],
                d.position[1],
                d.position[2],
                d.score_a,
                d.score_b,
                d.delta
            );
        }
        out
    }

    pub fn report(&self, a_name: &str, b_name: &str) -> String {
        format!(
            "comparison {a_name} - {b_name}\ncells      {}\nmean delta {:+.6}\nimproved   {}\nunchanged  {}\nworsened   {}\n",
            self.deltas.len(),
            self.mean_delta,
            self.improved,
            self.unchanged,
            self.worsened
        )
    }
}

/// Export formats for [`export`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    /// JSON document with cells, aggregates and fingerprint.
    Structured,
}

impl ExportFormat {
    /// `.json` means structured, anything else CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => ExportFormat::Structured,
            _ => ExportFormat::Csv,
        }
    }
}

pub const CSV_HEADER: &str = "ix,iy,iz,x_mm,y_mm,z_mm,tested,reachable,score";

pub fn to_csv(grid: &CapabilityGrid) -> String {
    let mut out = String::with_capacity(64 * (grid.cells.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for c in &grid.cells {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{:.6}",
            c.ix,
            c.iy,
            c.iz,
            c.position[0],
            c.position[1],
            c.position[2],
            c.tested,
            c.reachable,
            c.score
        );
    }
    out
}

pub fn to_structured(grid: &CapabilityGrid) -> String {
    let mut s = serde_json::to_string_pretty(grid).expect("grid serializes");
    s.push('\n');
    s
}

pub fn render(grid: &CapabilityGrid, format: ExportFormat) -> String {
    match format {
        ExportFormat::Csv => to_csv(grid),
        ExportFormat::Structured => to_structured(grid),
    }
}

pub fn export(grid: &CapabilityGrid, format: ExportFormat, path: &Path) -> Result<()> {
    std::fs::write(path, render(grid, format)).map_err(|e| Error::io(path, e))
}

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse {
        what: "capability csv",
        msg: msg.into(),
    }
}

pub fn from_csv(text: &str) -> Result<CapabilityGrid> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim_end() == CSV_HEADER => {}
        other => {
            return Err(parse_err(format!(
                "expected header {CSV_HEADER:?}, got {other:?}"
            )))
        }
    }
    let mut cells = Vec::new();
    for (n, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let row = n + 2;
        let f: Vec<&str> = line.trim_end().split(',').collect();
        if f.len() != 9 {
            return Err(parse_err(format!(
                "line {row}: {} fields, expected 9",
                f.len()
            )));
        }
        let int = |i: usize| -> Result<usize> {
            f[i].parse()
                .map_err(|_| parse_err(format!("line {row}: bad integer {:?}", f[i])))
        };
        let float = |i: usize| -> Result<f64> {
            f[i].parse()
                .map_err(|_| parse_err(format!("line {row}: bad number {:?}", f[i])))
        };
        let cell = CapabilityCell::new(
            [int(0)?, int(1)?, int(2)?],
            [float(3)?, float(4)?, float(5)?],
            int(6)?,
            int(7)?,
        );
        if cell.reachable > cell.tested {
            return Err(parse_err(format!("line {row}: reachable exceeds tested")));
        }
        if format!("{:.6}", cell.score) != f[8] {
            return Err(parse_err(format!(
                "line {row}: score {} does not match {}/{}",
                f[8], cell.reachable, cell.tested
            )));
        }
        cells.push(cell);
    }
    if cells.is_empty() {
        return Err(parse_err("no cells"));
    }
    let shape = [
        cells.iter().map(|c| c.ix).max().unwrap_or(0) + 1,
        cells.iter().map(|c| c.iy).max().unwrap_or(0) + 1,
        cells.iter().map(|c| c.iz).max().unwrap_or(0) + 1,
    ];
    CapabilityGrid::from_cells(shape, cells, None, None).map_err(|e| parse_err(e.to_string()))
}

pub fn from_structured(text: &str) -> Result<CapabilityGrid> {
    let grid: CapabilityGrid = serde_json::from_str(text).map_err(|e| Error::Parse {
        what: "capability document",
        msg: e.to_string(),
    })?;
    grid.check()?;
    Ok(grid)
}

/// Reads a grid written by [`export`], choosing the format from the extension.
pub fn import(path: &Path) -> Result<CapabilityGrid> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match ExportFormat::from_path(path) {
        ExportFormat::Csv => from_csv(&text),
        ExportFormat::Structured => from_structured(&text),
    }
}
