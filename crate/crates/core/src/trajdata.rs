//! Trajectory containers, CSV ingestion, and snapshot windowing.
//!
//! The trajectory CSV schema is `traj_id,t,x0,...,x{n-1}` with a header row.
//! Rows are sorted by `(traj_id, t)` and each trajectory lives on a uniform
//! time grid. Lines starting with `#` carry `key=value` metadata and are
//! ignored by the reader.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use faer::MatRef;

use crate::{Error, Matrix, Result};

/// Relative tolerance on time-grid uniformity.
pub const GRID_TOLERANCE: f64 = 1e-9;

/// A sampled trajectory `γ : [t0, t0 + (S-1)·dt] → ℝⁿ`.
///
/// Column `s` of `states` is `γ(t0 + s·dt)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    id: u64,
    t0: f64,
    dt: f64,
    states: Matrix,
}

impl Trajectory {
    pub fn new(id: u64, t0: f64, dt: f64, states: Matrix) -> Result<Self> {
        let traj = Self { id, t0, dt, states };
        traj.check()?;
        Ok(traj)
    }

    /// Builds a trajectory from a list of state vectors, one per sample.
    pub fn from_samples(id: u64, t0: f64, dt: f64, samples: &[Vec<f64>]) -> Result<Self> {
        let n = samples.first().map_or(0, Vec::len);
        if let Some(bad) = samples.iter().find(|s| s.len() != n) {
            return Err(Error::InvalidTrajectory {
                id,
                message: format!("ragged samples: expected dimension {n}, got {}", bad.len()),
            });
        }
        let states = Matrix::from_fn(n, samples.len(), |i, s| samples[s][i]);
        Self::new(id, t0, dt, states)
    }

    fn check(&self) -> Result<()> {
        let fail = |message: String| Error::InvalidTrajectory { id: self.id, message };
        if self.states.ncols() < 2 {
            return Err(fail(format!("S ≥ 2 violated (S = {})", self.states.ncols())));
        }
        if self.states.nrows() == 0 {
            return Err(fail("state dimension is zero".into()));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(fail(format!("dt must be positive and finite, got {}", self.dt)));
        }
        if !self.t0.is_finite() {
            return Err(fail(format!("t0 must be finite, got {}", self.t0)));
        }
        for s in 0..self.states.ncols() {
            for i in 0..self.states.nrows() {
                let v = self.states[(i, s)];
                if !v.is_finite() {
                    return Err(fail(format!("non-finite state entry {v} at sample {s}, coordinate {i}")));
                }
            }
        }
        Ok(())
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// State dimension `n`.
    pub fn dim(&self) -> usize {
        self.states.nrows()
    }

    /// Sample count `S`.
    pub fn len(&self) -> usize {
        self.states.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.states.ncols() == 0
    }

    /// `T = (S - 1)·dt`.
    pub fn duration(&self) -> f64 {
        (self.len() - 1) as f64 * self.dt
    }

    pub fn states(&self) -> MatRef<'_, f64> {
        self.states.as_ref()
    }

    /// State at sample `s` as a contiguous slice.
    pub fn sample(&self, s: usize) -> &[f64] {
        self.states.col_as_slice(s)
    }

    pub fn start(&self) -> &[f64] {
        self.sample(0)
    }

    pub fn end(&self) -> &[f64] {
        self.sample(self.len() - 1)
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|s| self.t0 + s as f64 * self.dt).collect()
    }

    /// Same id and time grid with new states.
    pub fn with_states(&self, states: Matrix) -> Result<Self> {
        if states.ncols() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), got: states.ncols() });
        }
        Self::new(self.id, self.t0, self.dt, states)
    }

    pub fn with_id(mut self, id: u64) -> Self {
        self.id = id;
        self
    }
}

/// An ordered, non-empty collection of trajectories sharing a state dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySet {
    trajectories: Vec<Trajectory>,
}

impl TrajectorySet {
    pub fn new(trajectories: Vec<Trajectory>) -> Result<Self> {
        validate(Self { trajectories })
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.trajectories[0].dim()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Trajectory> {
        self.trajectories.iter()
    }

    pub fn get(&self, index: usize) -> Option<&Trajectory> {
        self.trajectories.get(index)
    }

    pub fn as_slice(&self) -> &[Trajectory] {
        &self.trajectories
    }

    pub fn into_vec(self) -> Vec<Trajectory> {
        self.trajectories
    }

    /// The same trajectories sorted by content (grid, then samples), ignoring
    /// ids. Fits run on this order so that their output does not depend on
    /// the order of the input file.
    pub fn canonical(&self) -> Self {
        let mut trajectories = self.trajectories.clone();
        trajectories.sort_by(|a, b| {
            a.t0.total_cmp(&b.t0)
                .then(a.dt.total_cmp(&b.dt))
                .then(a.len().cmp(&b.len()))
                .then_with(|| {
                    (0..a.len())
                        .flat_map(|s| a.sample(s).iter().zip(b.sample(s)))
                        .map(|(x, y)| x.total_cmp(y))
                        .find(|o| o.is_ne())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
        });
        Self { trajectories }
    }

    /// Applies `f` to every trajectory and re-validates the result.
    pub fn try_map<F>(&self, f: F) -> Result<Self>
    where
        F: FnMut(&Trajectory) -> Result<Trajectory>,
    {
        Self::new(self.trajectories.iter().map(f).collect::<Result<Vec<_>>>()?)
    }
}

impl std::ops::Index<usize> for TrajectorySet {
    type Output = Trajectory;

    fn index(&self, index: usize) -> &Trajectory {
        &self.trajectories[index]
    }
}

impl<'a> IntoIterator for &'a TrajectorySet {
    type Item = &'a Trajectory;
    type IntoIter = std::slice::Iter<'a, Trajectory>;

    fn into_iter(self) -> Self::IntoIter {
        self.trajectories.iter()
    }
}

/// Re-checks every trajectory and set invariant, returning the set unchanged.
pub fn validate(set: TrajectorySet) -> Result<TrajectorySet> {
    let Some(first) = set.trajectories.first() else {
        return Err(Error::InvalidSet("no trajectories".into()));
    };
    let n = first.dim();
    let mut ids = HashSet::with_capacity(set.trajectories.len());
    for traj in &set.trajectories {
        traj.check()?;
        if traj.dim() != n {
            return Err(Error::InvalidTrajectory {
                id: traj.id,
                message: format!("state dimension {} differs from set dimension {n}", traj.dim()),
            });
        }
        if !ids.insert(traj.id) {
            return Err(Error::InvalidTrajectory { id: traj.id, message: "duplicate id".into() });
        }
    }
    Ok(set)
}

/// Splits an `n×S` snapshot matrix into overlapping trajectories of length
/// `window`, starting every `stride` samples.
pub fn window_snapshots(
    snapshots: MatRef<'_, f64>,
    t0: f64,
    dt: f64,
    window: usize,
    stride: usize,
) -> Result<TrajectorySet> {
    let total = snapshots.ncols();
    if window < 2 {
        return Err(Error::InvalidParameter(format!("window must be at least 2, got {window}")));
    }
    if stride < 1 {
        return Err(Error::InvalidParameter("stride must be at least 1".into()));
    }
    if window > total {
        return Err(Error::WindowTooLarge { window, snapshots: total });
    }
    let count = (total - window) / stride + 1;
    let trajectories = (0..count)
        .map(|k| {
            let start = k * stride;
            let states = snapshots.subcols(start, window).to_owned();
            Trajectory::new(k as u64, t0 + start as f64 * dt, dt, states)
        })
        .collect::<Result<Vec<_>>>()?;
    TrajectorySet::new(trajectories)
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

/// Reads a trajectory CSV file.
pub fn load_trajectories(path: impl AsRef<Path>) -> Result<TrajectorySet> {
    read_trajectories(open(path.as_ref())?)
}

/// Parses trajectory CSV from any reader.
pub fn read_trajectories<R: Read>(reader: R) -> Result<TrajectorySet> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| Error::Parse { row: 1, message: e.to_string() })?
        .clone();
    if header.len() < 3 || &header[0] != "traj_id" || &header[1] != "t" {
        return Err(Error::Parse {
            row: 1,
            message: "header must be traj_id,t,x0,...,x{n-1}".into(),
        });
    }
    let n = header.len() - 2;

    struct Pending {
        id: u64,
        first_row: usize,
        times: Vec<f64>,
        rows: Vec<usize>,
        samples: Vec<Vec<f64>>,
    }

    let finish = |p: Pending| -> Result<Trajectory> {
        if p.samples.len() < 2 {
            return Err(Error::Parse {
                row: p.first_row,
                message: format!("trajectory {}: S ≥ 2 violated (S = {})", p.id, p.samples.len()),
            });
        }
        let s_count = p.times.len();
        let t0 = p.times[0];
        let dt = (p.times[s_count - 1] - t0) / (s_count - 1) as f64;
        if !(dt > 0.0) {
            return Err(Error::Parse {
                row: p.rows[1],
                message: format!("trajectory {}: time must be strictly increasing", p.id),
            });
        }
        for (s, (&t, &row)) in p.times.iter().zip(&p.rows).enumerate() {
            let expected = t0 + s as f64 * dt;
            let tol = GRID_TOLERANCE * dt + 4.0 * f64::EPSILON * t.abs().max(expected.abs());
            if (t - expected).abs() > tol {
                return Err(Error::Parse {
                    row,
                    message: format!(
                        "trajectory {}: non-uniform grid (t = {t}, expected {expected})",
                        p.id
                    ),
                });
            }
        }
        Trajectory::from_samples(p.id, t0, dt, &p.samples)
    };

    let mut done: Vec<Trajectory> = Vec::new();
    let mut seen = HashSet::new();
    let mut current: Option<Pending> = None;
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Parse {
            row: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let row = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != n + 2 {
            return Err(Error::Parse {
                row,
                message: format!("ragged row: expected {} fields, got {}", n + 2, record.len()),
            });
        }
        let id: u64 = record[0]
            .parse()
            .map_err(|_| Error::Parse { row, message: format!("bad traj_id {:?}", &record[0]) })?;
        let mut values = Vec::with_capacity(n + 1);
        for field in record.iter().skip(1) {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::Parse { row, message: format!("bad number {field:?}") })?;
            if !v.is_finite() {
                return Err(Error::Parse { row, message: format!("non-finite value {field}") });
            }
            values.push(v);
        }
        let t = values[0];
        let state = values[1..].to_vec();

        match current.as_mut() {
            Some(p) if p.id == id => {
                p.times.push(t);
                p.rows.push(row);
                p.samples.push(state);
            }
            _ => {
                if let Some(p) = current.take() {
                    if id < p.id || seen.contains(&id) {
                        return Err(Error::Parse {
                            row,
                            message: format!("rows not sorted by traj_id (id {id} after {})", p.id),
                        });
                    }
                    done.push(finish(p)?);
                }
                seen.insert(id);
                current = Some(Pending {
                    id,
                    first_row: row,
                    times: vec![t],
                    rows: vec![row],
                    samples: vec![state],
                });
            }
        }
    }
    if let Some(p) = current.take() {
        done.push(finish(p)?);
    }
    TrajectorySet::new(done)
}

/// Writes `set` as trajectory CSV; `metadata` pairs become `# key=value` lines.
pub fn write_trajectories(
    path: impl AsRef<Path>,
    set: &TrajectorySet,
    metadata: &[(String, String)],
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    let mut out = BufWriter::new(file);
    write_trajectories_to(&mut out, set, metadata)
        .and_then(|_| out.flush())
        .map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

pub fn write_trajectories_to<W: Write>(
    out: &mut W,
    set: &TrajectorySet,
    metadata: &[(String, String)],
) -> std::io::Result<()> {
    for (key, value) in metadata {
        writeln!(out, "# {key}={value}")?;
    }
    write!(out, "traj_id,t")?;
    for i in 0..set.dim() {
        write!(out, ",x{i}")?;
    }
    writeln!(out)?;
    for traj in set {
        for s in 0..traj.len() {
            let t = traj.t0() + s as f64 * traj.dt();
            write!(out, "{},{:.16e}", traj.id(), t)?;
            for &v in traj.sample(s) {
                write!(out, ",{v:.16e}")?;
            }
            writeln!(out)?;
        }
    }
    Ok(())
}

/// Reads a snapshot CSV (header row, then one row per snapshot in time
/// order) into an `n×S` matrix.
pub fn load_snapshots(path: impl AsRef<Path>) -> Result<Matrix> {
    read_snapshots(open(path.as_ref())?)
}

pub fn read_snapshots<R: Read>(reader: R) -> Result<Matrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let n = rdr
        .headers()
        .map_err(|e| Error::Parse { row: 1, message: e.to_string() })?
        .len();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Parse {
            row: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let row = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != n {
            return Err(Error::Parse {
                row,
                message: format!("ragged row: expected {n} fields, got {}", record.len()),
            });
        }
        let snapshot = record
            .iter()
            .map(|f| match f.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(Error::Parse { row, message: format!("bad number {f:?}") }),
            })
            .collect::<Result<Vec<_>>>()?;
        columns.push(snapshot);
    }
    Ok(Matrix::from_fn(n, columns.len(), |i, s| columns[s][i]))
}
