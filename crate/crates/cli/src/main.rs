//! `pnc-sim`: Monte Carlo sweeps of the asynchronous PNC relay decoder.
//!
//! Exit codes: 0 success, 2 usage error, 3 unsupported configuration,
//! 4 I/O error.

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use asyncpnc::sim::{emit_csv, run_sweep_with, write_csv, Execution, FrontEnd, SimConfig};
use asyncpnc::{Algorithm, Error, Modulation, PulseShape, TimingOffsets, C64};
use clap::Parser;

const EXIT_USAGE: u8 = 2;
const EXIT_UNSUPPORTED: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "pnc-sim", version, about = "Asynchronous PNC relay decoding sweeps (CSV output)")]
struct Cli {
    /// Constellation: bpsk or qpsk.
    #[arg(long = "mod", default_value = "bpsk", value_parser = parse_from_str::<Modulation>)]
    modulation: Modulation,

    /// Pulse shape of both sources: rect or half-sine.
    #[arg(long, default_value = "rect", value_parser = parse_from_str::<PulseShape>)]
    pulse: PulseShape,

    /// Receiver front end: matched, evenodd or whitened.
    #[arg(long, default_value = "matched", value_parser = parse_from_str::<FrontEnd>)]
    frontend: FrontEnd,

    /// Decoder: map (linear), logmap or maxlog.
    #[arg(long, default_value = "logmap", value_parser = parse_from_str::<Algorithm>)]
    decoder: Algorithm,

    /// Relative delay in symbols, one value or a comma list (e.g. 0.25,0.5).
    #[arg(long, conflicts_with_all = ["tau_a", "tau_b"], value_delimiter = ',', value_parser = parse_f64)]
    delta: Option<Vec<f64>>,

    /// Arrival offset of source A in symbols.
    #[arg(long, requires = "tau_b")]
    tau_a: Option<f64>,

    /// Arrival offset of source B in symbols.
    #[arg(long, requires = "tau_a")]
    tau_b: Option<f64>,

    /// Channel gain of source A as "magnitude,phase" (phase in radians).
    #[arg(long, default_value = "1,0", value_parser = parse_gain)]
    ha: C64,

    /// Channel gain of source B as "magnitude,phase" (phase in radians).
    #[arg(long, default_value = "1,0", value_parser = parse_gain)]
    hb: C64,

    /// Per-source Es/N0 in dB: "start:stop:step" or a comma list.
    #[arg(long, default_value = "0:10:2")]
    snr: String,

    /// Frames per (SNR, delta) cell.
    #[arg(long, default_value_t = 100)]
    frames: u64,

    /// Symbols per frame.
    #[arg(long = "len", default_value_t = 64)]
    frame_len: usize,

    /// Master seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,

    /// Output CSV path; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,

    /// Run frames on the calling thread only.
    #[arg(long)]
    sequential: bool,

    /// Fill the throughput column with measured symbols per second. The
    /// output is then no longer byte-reproducible.
    #[arg(long)]
    timing: bool,
}

fn parse_from_str<T: std::str::FromStr<Err = Error>>(s: &str) -> Result<T, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("'{s}' is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("'{s}' is not finite"))
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    let v: Vec<f64> = s.split(',').map(parse_f64).collect::<Result<_, _>>()?;
    Ok(v)
}

fn parse_gain(s: &str) -> Result<C64, String> {
    let parts: Vec<&str> = s.split(',').collect();
    let [r, theta] = parts[..] else {
        return Err(format!("gain '{s}' must be \"magnitude,phase\""));
    };
    let (r, theta) = (parse_f64(r)?, parse_f64(theta)?);
    if r <= 0.0 {
        return Err(format!("gain magnitude must be positive, got {r}"));
    }
    Ok(C64::from_polar(r, theta))
}

fn parse_snr(s: &str) -> Result<Vec<f64>, String> {
    if !s.contains(':') {
        return parse_list(s);
    }
    let parts: Vec<f64> = s.split(':').map(parse_f64).collect::<Result<_, _>>()?;
    let [start, stop, step] = parts[..] else {
        return Err(format!("SNR range '{s}' must be start:stop:step"));
    };
    if step <= 0.0 || stop < start {
        return Err(format!("SNR range '{s}' needs step > 0 and stop >= start"));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    if count > 10_000 {
        return Err(format!("SNR range '{s}' has {count} points"));
    }
    // Rounded so that e.g. 0:1:0.1 prints as 0.3 rather than 0.30000000000000004.
    Ok((0..count).map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9).collect())
}

impl Cli {
    fn config(&self) -> Result<SimConfig, Error> {
        let offsets = match (&self.delta, self.tau_a, self.tau_b) {
            (Some(ds), _, _) => ds.iter().map(|&d| TimingOffsets::from_delta(d)).collect::<Result<_, _>>()?,
            (None, Some(a), Some(b)) => vec![TimingOffsets::new(a, b)?],
            _ => vec![TimingOffsets::from_delta(0.5)?],
        };
        Ok(SimConfig {
            modulation: self.modulation,
            pulse: self.pulse,
            front_end: self.frontend,
            decoder: self.decoder,
            offsets,
            h_a: self.ha,
            h_b: self.hb,
            snr_db: parse_snr(&self.snr).map_err(Error::InvalidInput)?,
            frame_len: self.frame_len,
            frames: self.frames,
            seed: self.seed,
            threads: self.threads,
            timing: self.timing,
        })
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidInput(_) => EXIT_USAGE,
        Error::Io(_) | Error::Csv(_) => EXIT_IO,
        _ => EXIT_UNSUPPORTED,
    }
}

fn run(cli: &Cli) -> Result<(), Error> {
    let config = cli.config()?;
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    let rows = run_sweep_with(&config, exec)?;
    let provenance = format!("pnc-sim {}", config.provenance());
    match &cli.out {
        Some(path) => emit_csv(&rows, Some(&provenance), path).map_err(|e| match e {
            Error::Io(io) => Error::Io(io::Error::new(io.kind(), format!("{}: {io}", path.display()))),
            other => other,
        }),
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write_csv(&rows, Some(&provenance), &mut lock)?;
            lock.flush()?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pnc-sim: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snr_range_and_list() {
        assert_eq!(parse_snr("0:10:2").unwrap(), vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
        assert_eq!(parse_snr("0:1:0.1").unwrap()[3], 0.3);
        assert_eq!(parse_snr("5").unwrap(), vec![5.0]);
        assert_eq!(parse_snr("1,-2.5").unwrap(), vec![1.0, -2.5]);
        for bad in ["0:10", "0:10:0", "10:0:1", "a", "1,,2", "0:1:nan"] {
            assert!(parse_snr(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn gains_are_polar() {
        let h = parse_gain("2,1.5707963267948966").unwrap();
        assert!(h.re.abs() < 1e-12 && (h.im - 2.0).abs() < 1e-12);
        for bad in ["1", "0,0", "1,2,3", "x,0"] {
            assert!(parse_gain(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn error_classes() {
        assert_eq!(exit_code(&Error::InvalidInput(String::new())), 2);
        assert_eq!(exit_code(&Error::Unsupported(String::new())), 3);
        assert_eq!(exit_code(&Error::DegenerateChannel { rho_ab_abs: 1.0 }), 3);
        assert_eq!(exit_code(&Error::Io(io::Error::other("x"))), 4);
    }

    #[test]
    fn clap_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
