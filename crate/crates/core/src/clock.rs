//! Injectable clock. The simulated variant only moves when told to, which is
//! what makes decay and trigger timing reproducible in tests and benchmarks.

use std::sync::atomic::{AtomicI64, Ordering};
use std::time::{SystemTime, UNIX_EPOCH};

use crate::error::{Result, ScmError};
use crate::model::{Duration, Timestamp};

#[derive(Debug)]
pub struct Clock {
    simulated: bool,
    // For the system clock this is the high-water mark that keeps `now`
    // monotonic; for the simulated clock it is the current time.
    last: AtomicI64,
}

/// 2025-01-01T00:00:00Z, the default start of simulated time.
pub const SIMULATED_EPOCH: Timestamp = Timestamp(1_735_689_600_000_000);

impl Clock {
    pub fn system() -> Self {
        Clock { simulated: false, last: AtomicI64::new(i64::MIN) }
    }

    pub fn simulated() -> Self {
        Self::simulated_at(SIMULATED_EPOCH)
    }

    pub fn simulated_at(start: Timestamp) -> Self {
        Clock { simulated: true, last: AtomicI64::new(start.as_micros()) }
    }

    pub fn is_simulated(&self) -> bool {
        self.simulated
    }

    pub fn now(&self) -> Timestamp {
        if self.simulated {
            return Timestamp(self.last.load(Ordering::SeqCst));
        }
        let wall = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_micros() as i64)
            .unwrap_or(0);
        let prev = self.last.fetch_max(wall, Ordering::SeqCst);
        Timestamp(prev.max(wall))
    }

    /// Moves simulated time forward. Errors on the system clock or for a
    /// negative duration.
    pub fn advance(&self, by: Duration) -> Result<Timestamp> {
        if !self.simulated {
            return Err(ScmError::InvalidArgument(
                "clock advance requires the simulated clock".into(),
            ));
        }
        if by.0 < 0 {
            return Err(ScmError::InvalidArgument("cannot move the clock backwards".into()));
        }
        let new = self.last.fetch_add(by.0, Ordering::SeqCst) + by.0;
        Ok(Timestamp(new))
    }
}

impl Clone for Clock {
    fn clone(&self) -> Self {
        Clock { simulated: self.simulated, last: AtomicI64::new(self.last.load(Ordering::SeqCst)) }
    }
}
