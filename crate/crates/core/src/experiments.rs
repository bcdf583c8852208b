//! Block-image experiments: data generation, reverse/forward pipelines,
//! metric series and artifact emission.
//!
//! Randomness comes from ChaCha8 seeded with `seed` via `seed_from_u64`.
//! Stream 0 draws the per-block constants of `constant-random` images
//! (one `f64` in `[0, 1)` per block, partition order); stream 1 draws the
//! noise start (one `f64` per pixel, row-major).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{run_forward, run_reverse_pair, ForwardParams, ReverseParams};
use crate::error::{Error, Result};
use crate::grid::{block_masses, BlockPartition, MassVector, PmfGrid};
use crate::io::write_pgm;
use crate::potentials::{e_block, e_pix, potential_v, potential_v_delta, ToleranceBand};

const DATA_STREAM: u64 = 0;
const NOISE_STREAM: u64 = 1;

pub const METRICS_HEADER: &str =
    "n,V_base,V_proj,Vdelta_base,Vdelta_proj,Eblock_base,Eblock_proj,Epix_base,Epix_proj";
pub const FORWARD_HEADER: &str = "n,V,Eblock";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImageMode {
    Checkerboard,
    ConstantRandom,
}

/// Where a trajectory starts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartState {
    /// I.i.d. uniform pixels, normalized.
    Noise,
    /// `forward_steps` of block blur applied to the data image.
    Blurred,
    /// The data image itself.
    Data,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(rename = "L_x")]
    pub lx: usize,
    #[serde(rename = "L_y")]
    pub ly: usize,
    #[serde(rename = "B_x")]
    pub bx: usize,
    #[serde(rename = "B_y")]
    pub by: usize,
    pub image_mode: ImageMode,
    pub c_high: f64,
    pub c_low: f64,
    pub seed: u64,
    pub delta: f64,
    pub beta: f64,
    pub sigma_smooth: f64,
    #[serde(rename = "T")]
    pub steps: usize,
    pub sigma_fwd: f64,
    pub forward_steps: usize,
    pub snapshot_steps: Vec<usize>,
    pub output_dir: PathBuf,
    pub start: StartState,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            lx: 128,
            ly: 128,
            bx: 4,
            by: 4,
            image_mode: ImageMode::Checkerboard,
            c_high: 0.9,
            c_low: 0.1,
            seed: 0,
            delta: 0.01,
            beta: 0.05,
            sigma_smooth: 0.5,
            steps: 40,
            sigma_fwd: 1.0,
            forward_steps: 50,
            snapshot_steps: vec![0, 10, 20, 40],
            output_dir: PathBuf::from("out"),
            start: StartState::Noise,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        BlockPartition::new(self.lx, self.ly, self.bx, self.by)?;
        let levels_ok = [self.c_high, self.c_low].iter().all(|c| c.is_finite() && *c >= 0.0);
        if !levels_ok || self.c_high + self.c_low <= 0.0 {
            return bad(format!(
                "c_high and c_low must be nonnegative and not both zero (got {}, {})",
                self.c_high, self.c_low
            ));
        }
        if !self.delta.is_finite() || self.delta < 0.0 {
            return bad(format!("delta must be nonnegative, got {}", self.delta));
        }
        self.reverse_params().validate()?;
        self.forward_params().validate()?;
        if let Some(&s) = self.snapshot_steps.iter().find(|&&s| s > self.steps) {
            return bad(format!("snapshot step {s} outside [0, {}]", self.steps));
        }
        Ok(())
    }

    pub fn partition(&self) -> Result<BlockPartition> {
        BlockPartition::new(self.lx, self.ly, self.bx, self.by)
    }

    pub fn reverse_params(&self) -> ReverseParams {
        ReverseParams {
            beta: self.beta,
            sigma_smooth: self.sigma_smooth,
            steps: self.steps,
        }
    }

    pub fn forward_params(&self) -> ForwardParams {
        ForwardParams {
            sigma_fwd: self.sigma_fwd,
            steps: self.forward_steps,
        }
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

/// Data image, its partition and reference block masses.
#[derive(Clone, Debug)]
pub struct DataImage {
    pub q_data: PmfGrid,
    pub partition: BlockPartition,
    pub w_ref: MassVector,
}

/// Builds the normalized block-constant data image.
pub fn make_data_image(config: &ExperimentConfig) -> Result<DataImage> {
    let partition = config.partition()?;
    let levels: Vec<f64> = match config.image_mode {
        ImageMode::Checkerboard => (0..partition.len())
            .map(|j| {
                let (bx, by) = partition.block_coords(j);
                if (bx + by) % 2 == 0 {
                    config.c_high
                } else {
                    config.c_low
                }
            })
            .collect(),
        ImageMode::ConstantRandom => {
            let mut rng = config.rng(DATA_STREAM);
            (0..partition.len()).map(|_| rng.gen::<f64>()).collect()
        }
    };
    let mut img = vec![0.0; config.lx * config.ly];
    for (j, block) in partition.blocks().iter().enumerate() {
        for i in block.x.clone() {
            img[i * config.ly + block.y.start..i * config.ly + block.y.end].fill(levels[j]);
        }
    }
    let q_data = PmfGrid::normalize(config.lx, config.ly, img)?;
    let w_ref = block_masses(&q_data, &partition)?;
    Ok(DataImage {
        q_data,
        partition,
        w_ref,
    })
}

/// I.i.d. `[0, 1)` pixels from the seeded noise stream, normalized.
pub fn make_initial_noise(config: &ExperimentConfig) -> Result<PmfGrid> {
    let mut rng = config.rng(NOISE_STREAM);
    let noise = (0..config.lx * config.ly).map(|_| rng.gen::<f64>()).collect();
    PmfGrid::normalize(config.lx, config.ly, noise)
}

/// Starting state selected by `config.start`.
pub fn make_start(config: &ExperimentConfig, data: &DataImage) -> Result<PmfGrid> {
    match config.start {
        StartState::Noise => make_initial_noise(config),
        StartState::Data => Ok(data.q_data.clone()),
        StartState::Blurred => {
            let traj = run_forward(&data.q_data, &data.partition, &config.forward_params())?;
            let last = traj.into_iter().last().expect("trajectory holds p0");
            PmfGrid::normalize(last.lx(), last.ly(), last.into_values())
        }
    }
}

/// Metrics of both reverse runs at one step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricRow {
    pub n: usize,
    pub v_base: f64,
    pub v_proj: f64,
    pub vdelta_base: f64,
    pub vdelta_proj: f64,
    pub eblock_base: f64,
    pub eblock_proj: f64,
    pub epix_base: f64,
    pub epix_proj: f64,
}

#[derive(Clone, Debug)]
pub struct TrajectoryRecord {
    pub states_base: Vec<PmfGrid>,
    pub states_proj: Vec<PmfGrid>,
    pub series: Vec<MetricRow>,
    /// Block-mass drift of the projected run before each projection (steps 1..=T).
    pub pre_projection_drift: Vec<f64>,
    pub data: DataImage,
}

/// Evaluates `V`, `V_δ`, `E_block` and `E_pix` along both trajectories.
///
/// Both runs are measured against the band built from the data image.
pub fn compute_metrics(
    states_base: &[PmfGrid],
    states_proj: &[PmfGrid],
    part: &BlockPartition,
    band: &ToleranceBand,
    x_data: &PmfGrid,
) -> Result<Vec<MetricRow>> {
    if states_base.len() != states_proj.len() {
        return Err(Error::Dimension(format!(
            "{} baseline states vs {} projected states",
            states_base.len(),
            states_proj.len()
        )));
    }
    states_base
        .iter()
        .zip(states_proj)
        .enumerate()
        .map(|(n, (pb, pp))| {
            Ok(MetricRow {
                n,
                v_base: potential_v(pb, part)?,
                v_proj: potential_v(pp, part)?,
                vdelta_base: potential_v_delta(pb, part, band)?,
                vdelta_proj: potential_v_delta(pp, part, band)?,
                eblock_base: e_block(pb, part, band.w_ref())?,
                eblock_proj: e_block(pp, part, band.w_ref())?,
                epix_base: e_pix(pb, x_data)?,
                epix_proj: e_pix(pp, x_data)?,
            })
        })
        .collect()
}

/// Baseline vs. projected reverse diffusion from the configured start.
pub fn run_restore_experiment(config: &ExperimentConfig) -> Result<TrajectoryRecord> {
    config.validate()?;
    let data = make_data_image(config)?;
    let band = ToleranceBand::new(data.w_ref.clone(), config.delta)?;
    let start = make_start(config, &data)?;
    let pair = run_reverse_pair(
        &start,
        &data.q_data,
        &data.partition,
        &band,
        &config.reverse_params(),
    )?;
    let series = compute_metrics(
        &pair.baseline,
        &pair.projected,
        &data.partition,
        &band,
        &data.q_data,
    )?;
    Ok(TrajectoryRecord {
        states_base: pair.baseline,
        states_proj: pair.projected,
        series,
        pre_projection_drift: pair.pre_projection_drift,
        data,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ForwardRow {
    pub n: usize,
    pub v: f64,
    /// Block-mass error against the starting state's masses.
    pub eblock: f64,
}

/// Forward block blur from the configured start, `forward_steps` long.
///
/// `start = blurred` is treated like `data` here: the blur is the run itself.
pub fn run_forward_experiment(config: &ExperimentConfig) -> Result<Vec<ForwardRow>> {
    config.validate()?;
    let data = make_data_image(config)?;
    let p0 = match config.start {
        StartState::Noise => make_initial_noise(config)?,
        StartState::Data | StartState::Blurred => data.q_data.clone(),
    };
    let part = &data.partition;
    let w0 = block_masses(&p0, part)?;
    run_forward(&p0, part, &config.forward_params())?
        .iter()
        .enumerate()
        .map(|(n, p)| {
            Ok(ForwardRow {
                n,
                v: potential_v(p, part)?,
                eblock: e_block(p, part, &w0)?,
            })
        })
        .collect()
}

pub fn encode_metrics_csv(series: &[MetricRow]) -> String {
    let mut s = String::from(METRICS_HEADER);
    s.push('\n');
    for r in series {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.n,
            r.v_base,
            r.v_proj,
            r.vdelta_base,
            r.vdelta_proj,
            r.eblock_base,
            r.eblock_proj,
            r.epix_base,
            r.epix_proj
        )
        .unwrap();
    }
    s
}

/// Writes the metric series; floats use the shortest round-trip form.
pub fn emit_csv(series: &[MetricRow], path: &Path) -> Result<()> {
    fs::write(path, encode_metrics_csv(series)).map_err(|e| Error::io(path, e))
}

pub fn parse_metrics_csv(text: &str) -> Result<Vec<MetricRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(METRICS_HEADER) {
        return Err(Error::InvalidConfig("unexpected metrics header".into()));
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 9 {
                return Err(Error::InvalidConfig(format!("bad metrics row {line:?}")));
            }
            let num = |i: usize| {
                f[i].parse::<f64>()
                    .map_err(|_| Error::InvalidConfig(format!("bad number {:?}", f[i])))
            };
            Ok(MetricRow {
                n: f[0]
                    .parse()
                    .map_err(|_| Error::InvalidConfig(format!("bad step {:?}", f[0])))?,
                v_base: num(1)?,
                v_proj: num(2)?,
                vdelta_base: num(3)?,
                vdelta_proj: num(4)?,
                eblock_base: num(5)?,
                eblock_proj: num(6)?,
                epix_base: num(7)?,
                epix_proj: num(8)?,
            })
        })
        .collect()
}

pub fn encode_forward_csv(rows: &[ForwardRow]) -> String {
    let mut s = String::from(FORWARD_HEADER);
    s.push('\n');
    for r in rows {
        writeln!(s, "{},{},{}", r.n, r.v, r.eblock).unwrap();
    }
    s
}

pub fn emit_forward_csv(rows: &[ForwardRow], path: &Path) -> Result<()> {
    fs::write(path, encode_forward_csv(rows)).map_err(|e| Error::io(path, e))
}

/// Writes `p` as an 8-bit graymap scaled to its own maximum.
pub fn emit_snapshot(p: &PmfGrid, path: &Path) -> Result<()> {
    write_pgm(p, path)
}

pub fn snapshot_name(run: &str, n: usize) -> String {
    format!("snap_{run}_n{n}.pgm")
}

/// Writes `metrics.csv` and the configured snapshots into `dir`.
pub fn emit_restore_outputs(
    record: &TrajectoryRecord,
    snapshot_steps: &[usize],
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let csv = dir.join("metrics.csv");
    emit_csv(&record.series, &csv)?;
    written.push(csv);
    for &n in snapshot_steps {
        let (base, proj) = match (record.states_base.get(n), record.states_proj.get(n)) {
            (Some(b), Some(p)) => (b, p),
            _ => {
                return Err(Error::InvalidConfig(format!(
                    "snapshot step {n} outside recorded trajectory"
                )))
            }
        };
        for (run, p) in [("base", base), ("proj", proj)] {
            let path = dir.join(snapshot_name(run, n));
            emit_snapshot(p, &path)?;
            written.push(path);
        }
    }
    Ok(written)
}
