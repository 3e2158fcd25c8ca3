//! Energy metering of code regions.
//!
//! Two providers: the Linux powercap RAPL package counter, and a portable
//! proxy that multiplies process CPU time by a configured wattage. RAPL is
//! preferred; when it cannot be read the meter falls back to the proxy and
//! says so in the log.
//!
//! Attribution is process-wide, so only one region may be measured at a
//! time. The meter refuses overlapping regions and counts every refusal.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

pub const DEFAULT_RAPL_DIR: &str = "/sys/class/powercap/intel-rapl:0";
pub const DEFAULT_PROXY_WATTS: f64 = 15.0;
pub const DEFAULT_WARMUP_S: f64 = 10.0;
pub const DEFAULT_COOLDOWN_S: f64 = 5.0;

#[derive(Debug, thiserror::Error)]
pub enum EnergyError {
    #[error("a measured region is already active")]
    Overlap,
    #[error("cannot read RAPL counter {path}: {source}")]
    Rapl {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("bad RAPL counter value in {path}: {value:?}")]
    RaplValue { path: String, value: String },
    #[error("invalid energy setting {name}={value}")]
    Setting { name: &'static str, value: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provider {
    Rapl,
    CpuTimeProxy,
}

impl Provider {
    pub fn id(self) -> &'static str {
        match self {
            Provider::Rapl => "rapl",
            Provider::CpuTimeProxy => "cpu_time_proxy",
        }
    }
}

impl fmt::Display for Provider {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Provider {
    type Err = EnergyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rapl" => Ok(Provider::Rapl),
            "cpu_time_proxy" | "proxy" => Ok(Provider::CpuTimeProxy),
            _ => Err(EnergyError::Setting {
                name: "provider",
                value: s.into(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergySample {
    pub joules: f64,
    pub duration_s: f64,
    pub provider: Provider,
    pub counter_wraps: u32,
}

/// Which provider to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderChoice {
    /// RAPL when readable, otherwise the proxy.
    #[default]
    Auto,
    Rapl,
    Proxy,
}

impl FromStr for ProviderChoice {
    type Err = EnergyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "auto" => Ok(ProviderChoice::Auto),
            "rapl" => Ok(ProviderChoice::Rapl),
            "proxy" | "cpu_time_proxy" => Ok(ProviderChoice::Proxy),
            _ => Err(EnergyError::Setting {
                name: "provider",
                value: s.into(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyConfig {
    pub provider: ProviderChoice,
    pub proxy_watts: f64,
    pub warmup_s: f64,
    pub cooldown_s: f64,
    pub rapl_dir: PathBuf,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        Self {
            provider: ProviderChoice::Auto,
            proxy_watts: DEFAULT_PROXY_WATTS,
            warmup_s: DEFAULT_WARMUP_S,
            cooldown_s: DEFAULT_COOLDOWN_S,
            rapl_dir: PathBuf::from(DEFAULT_RAPL_DIR),
        }
    }
}

impl EnergyConfig {
    /// Apply `DRIFTBENCH_ENERGY_PROVIDER`, `DRIFTBENCH_PROXY_WATTS`,
    /// `DRIFTBENCH_WARMUP_S`, `DRIFTBENCH_COOLDOWN_S` and
    /// `DRIFTBENCH_RAPL_DIR` when set.
    pub fn with_env_overrides(mut self) -> Result<Self, EnergyError> {
        self.apply_overrides(|k| std::env::var(k).ok())?;
        Ok(self)
    }

    pub fn apply_overrides(&mut self, get: impl Fn(&str) -> Option<String>) -> Result<(), EnergyError> {
        fn seconds(name: &'static str, v: String) -> Result<f64, EnergyError> {
            match v.trim().parse::<f64>() {
                Ok(x) if x >= 0.0 && x.is_finite() => Ok(x),
                _ => Err(EnergyError::Setting { name, value: v }),
            }
        }
        if let Some(v) = get("DRIFTBENCH_ENERGY_PROVIDER") {
            self.provider = v.parse()?;
        }
        if let Some(v) = get("DRIFTBENCH_PROXY_WATTS") {
            self.proxy_watts = seconds("DRIFTBENCH_PROXY_WATTS", v)?;
        }
        if let Some(v) = get("DRIFTBENCH_WARMUP_S") {
            self.warmup_s = seconds("DRIFTBENCH_WARMUP_S", v)?;
        }
        if let Some(v) = get("DRIFTBENCH_COOLDOWN_S") {
            self.cooldown_s = seconds("DRIFTBENCH_COOLDOWN_S", v)?;
        }
        if let Some(v) = get("DRIFTBENCH_RAPL_DIR") {
            self.rapl_dir = v.into();
        }
        Ok(())
    }
}

/// Difference of two readings of a counter that wraps at `max`.
/// Returns the delta and whether a wrap was assumed.
pub fn counter_delta(pre: u64, post: u64, max: u64) -> (u64, bool) {
    if post >= pre {
        (post - pre, false)
    } else {
        (max.saturating_sub(pre) + post, true)
    }
}

/// Package-domain energy counter in a powercap directory.
#[derive(Debug, Clone)]
pub struct RaplCounter {
    energy: PathBuf,
    max_range_uj: u64,
}

fn read_u64(path: &Path) -> Result<u64, EnergyError> {
    let text = fs::read_to_string(path).map_err(|source| EnergyError::Rapl {
        path: path.display().to_string(),
        source,
    })?;
    text.trim().parse().map_err(|_| EnergyError::RaplValue {
        path: path.display().to_string(),
        value: text.trim().into(),
    })
}

impl RaplCounter {
    /// Open the counter in `dir`, reading it once to prove access.
    pub fn open(dir: &Path) -> Result<Self, EnergyError> {
        let energy = dir.join("energy_uj");
        let max_range_uj = read_u64(&dir.join("max_energy_range_uj"))?;
        read_u64(&energy)?;
        Ok(Self { energy, max_range_uj })
    }

    pub fn read_uj(&self) -> Result<u64, EnergyError> {
        read_u64(&self.energy)
    }

    pub fn max_range_uj(&self) -> u64 {
        self.max_range_uj
    }
}

/// Process CPU time (user + system, all threads).
pub fn process_cpu_time() -> Duration {
    let mut ts = libc::timespec { tv_sec: 0, tv_nsec: 0 };
    // SAFETY: ts is a valid out-pointer; this clock id is always supported on Linux.
    let rc = unsafe { libc::clock_gettime(libc::CLOCK_PROCESS_CPUTIME_ID, &mut ts) };
    assert_eq!(rc, 0, "CLOCK_PROCESS_CPUTIME_ID unavailable");
    Duration::new(ts.tv_sec as u64, ts.tv_nsec as u32)
}

type CpuClock = Arc<dyn Fn() -> Duration + Send + Sync>;

enum Source {
    Rapl(RaplCounter),
    Proxy { watts: f64, clock: CpuClock },
}

impl fmt::Debug for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Rapl(c) => f.debug_tuple("Rapl").field(c).finish(),
            Source::Proxy { watts, .. } => f.debug_struct("Proxy").field("watts", watts).finish(),
        }
    }
}

#[derive(Debug)]
pub struct EnergyMeter {
    source: Source,
    busy: AtomicBool,
    trips: AtomicU64,
    warmups: AtomicU64,
}

struct Occupied<'a>(&'a AtomicBool);

impl Drop for Occupied<'_> {
    fn drop(&mut self) {
        self.0.store(false, Ordering::Release);
    }
}

impl EnergyMeter {
    /// Meter for `config`, probing RAPL unless the proxy is forced.
    pub fn from_config(config: &EnergyConfig) -> Self {
        if config.provider != ProviderChoice::Proxy {
            match RaplCounter::open(&config.rapl_dir) {
                Ok(c) => return Self::rapl(c),
                Err(e) => log::warn!(
                    "RAPL unavailable ({e}); using the CPU-time proxy at {} W",
                    config.proxy_watts
                ),
            }
        }
        Self::proxy(config.proxy_watts)
    }

    pub fn rapl(counter: RaplCounter) -> Self {
        Self::with_source(Source::Rapl(counter))
    }

    pub fn proxy(watts: f64) -> Self {
        Self::proxy_with_clock(watts, process_cpu_time)
    }

    /// Proxy meter driven by a custom CPU clock.
    pub fn proxy_with_clock(watts: f64, clock: impl Fn() -> Duration + Send + Sync + 'static) -> Self {
        Self::with_source(Source::Proxy {
            watts,
            clock: Arc::new(clock),
        })
    }

    fn with_source(source: Source) -> Self {
        Self {
            source,
            busy: AtomicBool::new(false),
            trips: AtomicU64::new(0),
            warmups: AtomicU64::new(0),
        }
    }

    pub fn provider(&self) -> Provider {
        match self.source {
            Source::Rapl(_) => Provider::Rapl,
            Source::Proxy { .. } => Provider::CpuTimeProxy,
        }
    }

    /// Number of times a region was refused because another was active.
    pub fn guard_trips(&self) -> u64 {
        self.trips.load(Ordering::Relaxed)
    }

    pub fn warmups(&self) -> u64 {
        self.warmups.load(Ordering::Relaxed)
    }

    fn occupy(&self) -> Result<Occupied<'_>, EnergyError> {
        if self
            .busy
            .compare_exchange(false, true, Ordering::Acquire, Ordering::Relaxed)
            .is_err()
        {
            self.trips.fetch_add(1, Ordering::Relaxed);
            return Err(EnergyError::Overlap);
        }
        Ok(Occupied(&self.busy))
    }

    /// Run `region` and report the energy it used.
    pub fn measure<R>(&self, region: impl FnOnce() -> R) -> Result<(R, EnergySample), EnergyError> {
        let _occupied = self.occupy()?;
        match &self.source {
            Source::Rapl(counter) => {
                let pre = counter.read_uj()?;
                let t0 = Instant::now();
                let out = region();
                let duration = t0.elapsed();
                let post = counter.read_uj()?;
                let (delta, wrapped) = counter_delta(pre, post, counter.max_range_uj);
                Ok((
                    out,
                    EnergySample {
                        joules: delta as f64 * 1e-6,
                        duration_s: duration.as_secs_f64(),
                        provider: Provider::Rapl,
                        counter_wraps: wrapped as u32,
                    },
                ))
            }
            Source::Proxy { watts, clock } => {
                let c0 = clock();
                let t0 = Instant::now();
                let out = region();
                let duration = t0.elapsed();
                let cpu = clock().saturating_sub(c0);
                Ok((
                    out,
                    EnergySample {
                        joules: cpu.as_secs_f64() * watts,
                        duration_s: duration.as_secs_f64(),
                        provider: Provider::CpuTimeProxy,
                        counter_wraps: 0,
                    },
                ))
            }
        }
    }

    /// Spin on a fixed CPU-bound workload for at least `seconds`.
    /// Returns the number of work rounds done.
    pub fn warm_up(&self, seconds: f64) -> u64 {
        self.warmups.fetch_add(1, Ordering::Relaxed);
        let target = Duration::from_secs_f64(seconds.max(0.0));
        let start = Instant::now();
        let mut rounds = 0u64;
        loop {
            std::hint::black_box(busy_work(100_000));
            rounds += 1;
            if start.elapsed() >= target {
                return rounds;
            }
        }
    }
}

/// Deterministic integer workload of `iterations` steps.
pub fn busy_work(iterations: u64) -> u64 {
    let mut x = 0x9E37_79B9_7F4A_7C15u64;
    for i in 0..iterations {
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        x = x.wrapping_add(std::hint::black_box(i));
    }
    x
}

/// Block for at least `seconds` of monotonic time.
pub fn cooldown_sleep(seconds: f64) {
    let target = Duration::from_secs_f64(seconds.max(0.0));
    let start = Instant::now();
    while let Some(left) = target.checked_sub(start.elapsed()) {
        if left.is_zero() {
            break;
        }
        std::thread::sleep(left);
    }
}
