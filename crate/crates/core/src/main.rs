use clap::{Parser, Subcommand};
use satqkd::netsim::{
    load_store, run_scenario, validate_scenario, write_run_dir, write_store, RunError, Scenario,
};
use satqkd::secure_apps::{
    aes_session_run, decode_envelope, encode_envelope, otp_decrypt, otp_encrypt, Aes128Cipher, AesSession,
};
use satqkd::Parallelism;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "satqkd", version, about = "Satellite-relayed QKD network simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario and write its report directory.
    Run {
        scenario: PathBuf,
        /// Overrides the scenario's master seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "run")]
        out: PathBuf,
        /// Worker threads for the parallel backend.
        #[arg(long)]
        threads: Option<usize>,
        /// Overrides the scenario's parallelism setting.
        #[arg(long, value_parser = parse_parallelism)]
        parallelism: Option<Parallelism>,
    },
    /// Check a scenario file and list every fault.
    Validate { scenario: PathBuf },
    /// Summarize a run directory.
    Report {
        dir: PathBuf,
        /// Print the raw pass CSV instead of a table.
        #[arg(long)]
        csv: bool,
    },
    /// One-time-pad encrypt a file with the sender's view of a pool.
    OtpSend {
        dir: PathBuf,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Decrypt an envelope with the receiver's view of the pool.
    OtpRecv {
        dir: PathBuf,
        /// Receiving node.
        #[arg(long = "as")]
        node: String,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Run a refreshed-key AES-128 session between two nodes.
    AesSession {
        dir: PathBuf,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long, default_value_t = 4500.0)]
        duration: f64,
        #[arg(long, default_value_t = 1.0)]
        period: f64,
        #[arg(long, default_value_t = 0)]
        payload: u64,
    },
}

fn parse_parallelism(s: &str) -> Result<Parallelism, String> {
    match s {
        "sequential" => Ok(Parallelism::Sequential),
        "rayon" => Ok(Parallelism::Rayon),
        _ => Err(format!("expected 'sequential' or 'rayon', got '{s}'")),
    }
}

enum Failure {
    Faults(Vec<String>),
    Runtime(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Faults(f)) => {
            for line in &f {
                eprintln!("fault: {line}");
            }
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn load_scenario(path: &Path) -> Result<Scenario, Failure> {
    Scenario::load(path).map_err(|e| Failure::Faults(vec![e.to_string()]))
}

fn dispatch(cmd: Cmd) -> Result<(), Failure> {
    match cmd {
        Cmd::Run {
            scenario,
            seed,
            out,
            threads,
            parallelism,
        } => {
            let mut s = load_scenario(&scenario)?;
            if let Some(seed) = seed {
                s.master_seed = seed;
            }
            if let Some(p) = parallelism {
                s.pass_model.parallelism = p;
            }
            set_threads(threads)?;
            let report = run_scenario(&s).map_err(|e| match e {
                RunError::Invalid(f) => Failure::Faults(f),
                RunError::Runtime(m) => Failure::Runtime(m),
            })?;
            write_run_dir(&report, &out)?;
            let final_bits: u64 = report.passes.iter().map(|r| r.final_bits).sum();
            println!(
                "{}: {} passes, {} final bits, {} workload items, {} warnings -> {}",
                report.scenario,
                report.passes.len(),
                final_bits,
                report.apps.len(),
                report.warnings(),
                out.display()
            );
            Ok(())
        }
        Cmd::Validate { scenario } => {
            let s = load_scenario(&scenario)?;
            let faults = validate_scenario(&s);
            if faults.is_empty() {
                println!("{}: ok", scenario.display());
                Ok(())
            } else {
                Err(Failure::Faults(faults))
            }
        }
        Cmd::Report { dir, csv } => report(&dir, csv),
        Cmd::OtpSend {
            dir,
            from,
            to,
            input,
            output,
        } => {
            let (state, mut store) = load_store(&dir)?;
            let t = state.clock + 1.0;
            let msg = std::fs::read(&input)?;
            let env = otp_encrypt(&msg, store.pool_mut(&from, &to)?, t)?;
            std::fs::write(&output, encode_envelope(&env))?;
            write_store(&dir, &state.scenario, state.master_seed, t, &store)?;
            println!("{} bytes sealed with key bits [{}, {})", msg.len(), env.key_ref.offset, env.key_ref.offset + env.key_ref.bits);
            Ok(())
        }
        Cmd::OtpRecv {
            dir,
            node,
            input,
            output,
        } => {
            let (state, mut store) = load_store(&dir)?;
            let t = state.clock + 1.0;
            let env = decode_envelope(&std::fs::read(&input)?)?;
            let (a, b) = &env.key_ref.pair;
            let peer = if &node == a { b } else { a };
            let msg = otp_decrypt(&env, store.pool_mut(&node, peer)?, t)?;
            std::fs::write(&output, &msg)?;
            write_store(&dir, &state.scenario, state.master_seed, t, &store)?;
            println!("{} bytes recovered", msg.len());
            Ok(())
        }
        Cmd::AesSession {
            dir,
            a,
            b,
            duration,
            period,
            payload,
        } => {
            let (state, mut store) = load_store(&dir)?;
            let t = state.clock + 1.0;
            let mut session = AesSession::new("cli", duration, payload);
            session.refresh_period_s = period;
            let offset = store.aligned_offset(&a, &b);
            let mut reports = Vec::new();
            for (h, p) in [(&a, &b), (&b, &a)] {
                let pool = store.pool_mut(h, p)?;
                pool.skip_to(offset, t)?;
                reports.push(aes_session_run(&session, pool, &Aes128Cipher, t)?);
            }
            write_store(&dir, &state.scenario, state.master_seed, t + duration, &store)?;
            let r = &reports[0];
            println!(
                "{} refreshes, {} bytes of key, keystreams agree: {}{}",
                r.refreshes,
                r.bytes_consumed(),
                r.keystream_digest == reports[1].keystream_digest,
                r.shortfall_at.map(|s| format!(", key ran out at t={s}s")).unwrap_or_default()
            );
            if r.completed() {
                Ok(())
            } else {
                Err(Failure::Runtime("session ran out of key".into()))
            }
        }
    }
}

fn set_threads(threads: Option<usize>) -> Result<(), Failure> {
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}

fn report(dir: &Path, csv: bool) -> Result<(), Failure> {
    let passes = std::fs::read_to_string(dir.join("passes.csv"))?;
    if csv {
        print!("{passes}");
        return Ok(());
    }
    println!("{:<22} {:<10} {:>10} {:>8} {:>10}", "pass", "station", "sifted", "qber%", "final");
    for line in passes.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let qber: f64 = f[4].parse().unwrap_or(f64::NAN);
        println!("{:<22} {:<10} {:>10} {:>8.2} {:>10}", f[0], f[1], f[3], 100.0 * qber, f[8]);
    }
    let (_, store) = load_store(dir)?;
    println!();
    println!("{:<24} {:>12} {:>12} {:>12}", "pool", "deposited", "consumed", "available");
    for p in store.pools() {
        println!("{:<24} {:>12} {:>12} {:>12}", p.label(), p.total_deposited(), p.consumed_offset(), p.available());
    }
    Ok(())
}
