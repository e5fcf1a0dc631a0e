//! Monte Carlo sweep over (SNR, delta) cells.
//!
//! Frame `i` of every cell draws its symbols and noise from stream `i` of a
//! ChaCha8 generator keyed by the master seed. Cells therefore share their
//! random numbers (common random numbers across the sweep), results do not
//! depend on scheduling, and per-cell counts are plain sums.

mod csv;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bcjr::{decode, hard_decisions, xor_posteriors, Algorithm, IsiFrame};
use crate::front_end::{
    simulate_even_odd, simulate_matched_filter, simulate_whitened, whitened_isi_frame, ChannelParams,
    SymbolFrame,
};
use crate::modulation::Modulation;
use crate::signal_model::{PulseShape, TimingOffsets};
use crate::whitening::{spectral_factorize, FrameWhitener, IsiModel};
use crate::{Error, Result, C64};

pub use self::csv::{emit_csv, read_csv, write_csv, CSV_HEADER};

/// How the relay observations are produced and turned into a decoder frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrontEnd {
    /// Matched-filter bank with colored noise, whitened exactly per frame.
    Matched,
    /// Rectangular-pulse even/odd sampler.
    EvenOdd,
    /// Samples drawn directly from the stationary whitened ISI model.
    Whitened,
}

impl FrontEnd {
    pub fn name(self) -> &'static str {
        match self {
            FrontEnd::Matched => "matched",
            FrontEnd::EvenOdd => "evenodd",
            FrontEnd::Whitened => "whitened",
        }
    }
}

impl fmt::Display for FrontEnd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FrontEnd {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "matched" => Ok(FrontEnd::Matched),
            "evenodd" | "even-odd" => Ok(FrontEnd::EvenOdd),
            "whitened" => Ok(FrontEnd::Whitened),
            other => Err(Error::InvalidInput(format!("unknown front end '{other}'"))),
        }
    }
}

/// Sequential or rayon-parallel frame loop. Both produce identical rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Falls back to sequential when built without the `parallel` feature.
    Parallel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub modulation: Modulation,
    pub pulse: PulseShape,
    pub front_end: FrontEnd,
    pub decoder: Algorithm,
    /// One sweep axis; each entry is one pair of arrival offsets.
    pub offsets: Vec<TimingOffsets>,
    pub h_a: C64,
    pub h_b: C64,
    pub snr_db: Vec<f64>,
    pub frame_len: usize,
    pub frames: u64,
    pub seed: u64,
    /// Worker threads for the parallel loop; `None` uses the global pool.
    pub threads: Option<usize>,
    /// Measure wall-clock throughput. Off by default so output is reproducible.
    pub timing: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            modulation: Modulation::Bpsk,
            pulse: PulseShape::Rectangular,
            front_end: FrontEnd::Matched,
            decoder: Algorithm::LogMap,
            offsets: vec![TimingOffsets::from_delta(0.5).expect("valid delta")],
            h_a: C64::new(1.0, 0.0),
            h_b: C64::new(1.0, 0.0),
            snr_db: vec![10.0],
            frame_len: 64,
            frames: 100,
            seed: 1,
            threads: None,
            timing: false,
        }
    }
}

impl SimConfig {
    /// Noise variance for a per-source `Es/N0` of `snr_db`, with the average
    /// received symbol energy `Es = (|h_a|^2 + |h_b|^2) / 2` (unit-energy
    /// constellations) and `N0 = sigma2`.
    pub fn sigma2(&self, snr_db: f64) -> f64 {
        let es = 0.5 * (self.h_a.norm_sqr() + self.h_b.norm_sqr());
        es / 10f64.powf(snr_db / 10.0)
    }

    /// Usage problems come back as [`Error::InvalidInput`]; well-formed
    /// configurations the model cannot handle as [`Error::Unsupported`].
    pub fn validate(&self) -> Result<()> {
        if self.snr_db.is_empty() {
            return Err(Error::InvalidInput("the SNR list is empty".into()));
        }
        if let Some(s) = self.snr_db.iter().find(|s| !s.is_finite()) {
            return Err(Error::InvalidInput(format!("SNR {s} dB is not finite")));
        }
        if self.offsets.is_empty() {
            return Err(Error::InvalidInput("no timing offsets given".into()));
        }
        if self.frames == 0 {
            return Err(Error::InvalidInput("frame count must be at least 1".into()));
        }
        if self.frame_len == 0 {
            return Err(Error::InvalidInput("frame length must be at least 1".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidInput("thread count must be at least 1".into()));
        }
        for (name, h) in [("h_a", self.h_a), ("h_b", self.h_b)] {
            if !(h.re.is_finite() && h.im.is_finite()) || h.norm() == 0.0 {
                return Err(Error::InvalidInput(format!("{name} must be finite and nonzero")));
            }
        }
        for off in &self.offsets {
            let delta = off.delta();
            if delta == 0.0 {
                return Err(Error::Unsupported(
                    "delta = 0 is symbol-synchronous; use a standard synchronous detector".into(),
                ));
            }
            if self.front_end == FrontEnd::EvenOdd {
                self.params(*off, 1.0)?.check_even_odd()?;
            }
        }
        Ok(())
    }

    fn params(&self, offsets: TimingOffsets, sigma2: f64) -> Result<ChannelParams> {
        ChannelParams::new(
            self.h_a,
            self.h_b,
            sigma2,
            offsets,
            self.pulse,
            self.pulse,
            self.modulation,
            self.frame_len,
        )
    }

    /// One-line description of everything that determines the output.
    pub fn provenance(&self) -> String {
        let offsets: Vec<String> =
            self.offsets.iter().map(|o| format!("{}/{}", o.tau_a(), o.tau_b())).collect();
        let snr: Vec<String> = self.snr_db.iter().map(|s| s.to_string()).collect();
        format!(
            "mod={} pulse={} frontend={} decoder={} tau_a/tau_b={} ha={},{} hb={},{} snr_db={} \
             len={} frames={} seed={} snr_def=Es/N0,Es=(|ha|^2+|hb|^2)/2,N0=sigma2",
            self.modulation,
            self.pulse,
            self.front_end,
            self.decoder,
            offsets.join(";"),
            self.h_a.norm(),
            self.h_a.arg(),
            self.h_b.norm(),
            self.h_b.arg(),
            snr.join(";"),
            self.frame_len,
            self.frames,
            self.seed,
        )
    }
}

/// Aggregated results of one (SNR, delta) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub snr_db: f64,
    pub delta: f64,
    pub front_end: FrontEnd,
    pub decoder: Algorithm,
    pub frames: u64,
    pub frame_len: usize,
    /// Fraction of epochs where the decided pair `(a, b)` is wrong.
    pub pair_ser: f64,
    pub xor_ber: f64,
    pub xor_ser: f64,
    /// Decoded pair-symbols per second, only when timing was requested.
    pub throughput: Option<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Counts {
    pair_errors: u64,
    xor_bit_errors: u64,
    xor_symbol_errors: u64,
}

impl Counts {
    fn add(self, o: Counts) -> Counts {
        Counts {
            pair_errors: self.pair_errors + o.pair_errors,
            xor_bit_errors: self.xor_bit_errors + o.xor_bit_errors,
            xor_symbol_errors: self.xor_symbol_errors + o.xor_symbol_errors,
        }
    }
}

/// Everything about a cell that is shared by its frames.
struct Cell {
    params: ChannelParams,
    front_end: FrontEnd,
    decoder: Algorithm,
    frame_whitener: Option<FrameWhitener>,
    coloring: crate::whitening::WhiteningFilter,
    model: IsiModel,
    seed: u64,
}

impl Cell {
    fn new(config: &SimConfig, offsets: TimingOffsets, snr_db: f64) -> Result<Self> {
        let params = config.params(offsets, config.sigma2(snr_db))?;
        let cov = params.covariance();
        let coloring = spectral_factorize(&cov)?;
        let model = IsiModel::from_filter(&coloring, config.h_a, config.h_b, params.sigma2);
        let frame_whitener = match config.front_end {
            FrontEnd::Matched => Some(FrameWhitener::new(&cov, config.h_a, config.h_b, config.frame_len)?),
            _ => None,
        };
        Ok(Self {
            params,
            front_end: config.front_end,
            decoder: config.decoder,
            frame_whitener,
            coloring,
            model,
            seed: config.seed,
        })
    }

    fn observe(&self, symbols: &SymbolFrame, rng: &mut ChaCha8Rng) -> Result<IsiFrame> {
        let p = &self.params;
        match self.front_end {
            FrontEnd::Matched => {
                let cov = p.covariance();
                let y = simulate_matched_filter(symbols, p, &cov, &self.coloring, rng)?;
                let fw = self.frame_whitener.as_ref().expect("built for the matched front end");
                fw.isi_frame(&y, p.sigma2, p.modulation)
            }
            FrontEnd::EvenOdd => {
                Ok(simulate_even_odd(symbols, p, rng)?.to_isi_frame(p.h_a, p.h_b, p.sigma2, p.modulation))
            }
            FrontEnd::Whitened => {
                let r = simulate_whitened(symbols, &self.model, rng);
                Ok(whitened_isi_frame(r, &self.model, p.modulation))
            }
        }
    }

    fn run_frame(&self, index: u64) -> Result<Counts> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        let symbols = SymbolFrame::random(self.params.modulation, self.params.frame_len, &mut rng);
        let frame = self.observe(&symbols, &mut rng)?;
        let apps = decode(&frame, self.decoder)?;
        let pairs = hard_decisions(&apps);
        let xor = xor_posteriors(&apps).hard_decisions();
        let truth = symbols.xor_labels();
        let mut c = Counts::default();
        for (k, pair) in pairs.iter().enumerate() {
            if pair.a != symbols.indices_a()[k] || pair.b != symbols.indices_b()[k] {
                c.pair_errors += 1;
            }
            let wrong = (xor[k] ^ truth[k]) as u32;
            c.xor_bit_errors += u64::from(wrong.count_ones());
            c.xor_symbol_errors += u64::from(wrong != 0);
        }
        Ok(c)
    }

    fn run(&self, frames: u64, exec: Execution, threads: Option<usize>) -> Result<Counts> {
        match exec {
            Execution::Sequential => run_sequential(self, frames),
            Execution::Parallel => run_parallel(self, frames, threads),
        }
    }
}

fn run_sequential(cell: &Cell, frames: u64) -> Result<Counts> {
    (0..frames).try_fold(Counts::default(), |acc, i| Ok(acc.add(cell.run_frame(i)?)))
}

#[cfg(feature = "parallel")]
fn run_parallel(cell: &Cell, frames: u64, threads: Option<usize>) -> Result<Counts> {
    use rayon::prelude::*;
    let work = || {
        (0..frames)
            .into_par_iter()
            .map(|i| cell.run_frame(i))
            .try_reduce(Counts::default, |a, b| Ok(a.add(b)))
    };
    match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::InvalidInput(format!("cannot build thread pool: {e}")))?
            .install(work),
        None => work(),
    }
}

#[cfg(not(feature = "parallel"))]
fn run_parallel(cell: &Cell, frames: u64, _threads: Option<usize>) -> Result<Counts> {
    run_sequential(cell, frames)
}

/// Runs every (delta, SNR) cell in parallel mode; see [`run_sweep_with`].
pub fn run_sweep(config: &SimConfig) -> Result<Vec<MetricRow>> {
    run_sweep_with(config, Execution::Parallel)
}

/// Rows are ordered by delta (outer) then SNR (inner), as configured.
pub fn run_sweep_with(config: &SimConfig, exec: Execution) -> Result<Vec<MetricRow>> {
    config.validate()?;
    let mut rows = Vec::with_capacity(config.offsets.len() * config.snr_db.len());
    let symbols = config.frames as f64 * config.frame_len as f64;
    let bits = symbols * config.modulation.bits_per_symbol() as f64;
    for off in &config.offsets {
        for &snr in &config.snr_db {
            let cell = Cell::new(config, *off, snr)?;
            let start = Instant::now();
            let counts = cell.run(config.frames, exec, config.threads)?;
            let elapsed = start.elapsed().as_secs_f64();
            rows.push(MetricRow {
                snr_db: snr,
                delta: off.delta(),
                front_end: config.front_end,
                decoder: config.decoder,
                frames: config.frames,
                frame_len: config.frame_len,
                pair_ser: counts.pair_errors as f64 / symbols,
                xor_ber: counts.xor_bit_errors as f64 / bits,
                xor_ser: counts.xor_symbol_errors as f64 / symbols,
                throughput: config.timing.then(|| symbols / elapsed.max(f64::MIN_POSITIVE)),
                seed: config.seed,
            });
        }
    }
    Ok(rows)
}
