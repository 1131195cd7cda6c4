use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::spectral::snapshot::{read_snapshot, write_snapshot};
use crate::spectral::{Grid, SpectralField};
use crate::{Error, Result};

/// Which variable the snapshots of a trajectory hold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldTag {
    /// The Benjamin-Ono solution `u`.
    U,
    /// The gauge variable `V`.
    V,
}

/// JSON manifest written next to the snapshot files.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub times: Vec<f64>,
    pub dt: f64,
    pub scheme: String,
    pub dealiasing: String,
    pub grid: Grid,
    pub tag: FieldTag,
    pub files: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    grid: Grid,
    tag: FieldTag,
    pub(crate) dt: f64,
    scheme: String,
    dealiasing: String,
    times: Vec<f64>,
    snapshots: Vec<SpectralField>,
}

impl Trajectory {
    pub(crate) fn new(grid: Grid, tag: FieldTag, dt: f64, scheme: &str) -> Self {
        Self {
            grid,
            tag,
            dt,
            scheme: scheme.to_string(),
            dealiasing: "pad-2x".to_string(),
            times: Vec::new(),
            snapshots: Vec::new(),
        }
    }

    pub(crate) fn push(&mut self, time: f64, field: SpectralField) {
        debug_assert!(self.times.last().map_or(time == 0.0, |&t| time > t));
        debug_assert_eq!(*field.grid(), self.grid);
        self.times.push(time);
        self.snapshots.push(field);
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn tag(&self) -> FieldTag {
        self.tag
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn scheme(&self) -> &str {
        &self.scheme
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn snapshots(&self) -> &[SpectralField] {
        &self.snapshots
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Final time and state.
    pub fn last(&self) -> (f64, &SpectralField) {
        let i = self.len() - 1;
        (self.times[i], &self.snapshots[i])
    }

    /// Snapshot recorded closest to time `t`.
    pub fn nearest(&self, t: f64) -> (f64, &SpectralField) {
        let i = (0..self.len())
            .min_by(|&a, &b| {
                (self.times[a] - t)
                    .abs()
                    .total_cmp(&(self.times[b] - t).abs())
            })
            .expect("non-empty trajectory");
        (self.times[i], &self.snapshots[i])
    }

    pub fn manifest(&self) -> Manifest {
        Manifest {
            times: self.times.clone(),
            dt: self.dt,
            scheme: self.scheme.clone(),
            dealiasing: self.dealiasing.clone(),
            grid: self.grid,
            tag: self.tag,
            files: (0..self.len()).map(snapshot_name).collect(),
        }
    }

    /// Writes `manifest.json` and one snapshot file per recorded time.
    pub fn export(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let manifest = self.manifest();
        for ((name, field), &t) in manifest.files.iter().zip(&self.snapshots).zip(&self.times) {
            let mut w = BufWriter::new(File::create(dir.join(name))?);
            write_snapshot(&mut w, field, t)?;
        }
        let text = serde_json::to_string_pretty(&manifest)?;
        fs::write(dir.join("manifest.json"), text)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let text = fs::read_to_string(dir.join("manifest.json"))?;
        let m: Manifest = serde_json::from_str(&text)?;
        if m.files.len() != m.times.len() {
            return Err(Error::Format("manifest times/files length differ".into()));
        }
        let mut traj = Trajectory::new(m.grid, m.tag, m.dt, &m.scheme);
        traj.dealiasing = m.dealiasing;
        for (name, &t) in m.files.iter().zip(&m.times) {
            let (field, time) = read_snapshot(BufReader::new(File::open(dir.join(name))?))?;
            if *field.grid() != m.grid {
                return Err(Error::GridMismatch);
            }
            if time != t {
                return Err(Error::Format(format!("{name}: time {time} != manifest {t}")));
            }
            if traj.times.last().is_some_and(|&prev| t <= prev) {
                return Err(Error::Format("times not strictly increasing".into()));
            }
            traj.push(t, field);
        }
        Ok(traj)
    }
}

fn snapshot_name(i: usize) -> String {
    format!("snap_{i:06}.bosf")
}
