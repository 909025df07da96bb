//! Piecewise control-field schedules: write, dark storage, read.

use crate::error::{domain, Result};

/// Default switching time of the control field.
pub const DEFAULT_RAMP: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Off,
    Constant(f64),
    /// Smoothstep from 0 up to the value over the segment.
    RampUp(f64),
    /// Smoothstep from the value down to 0 over the segment.
    RampDown(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub t_start: f64,
    pub t_end: f64,
    pub shape: Shape,
}

fn smoothstep(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x * x * (3.0 - 2.0 * x)
}

impl Segment {
    fn omega_at(&self, t: f64) -> f64 {
        let len = self.t_end - self.t_start;
        match self.shape {
            Shape::Off => 0.0,
            Shape::Constant(w) => w,
            Shape::RampUp(w) => w * smoothstep((t - self.t_start) / len),
            Shape::RampDown(w) => w * smoothstep((self.t_end - t) / len),
        }
    }

    fn peak(&self) -> f64 {
        match self.shape {
            Shape::Off => 0.0,
            Shape::Constant(w) | Shape::RampUp(w) | Shape::RampDown(w) => w,
        }
    }
}

/// Control Rabi frequency as a function of time, starting at t = 0.
///
/// A storage schedule marks the end of writing and the start of reading;
/// the control is identically zero between them.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSchedule {
    segments: Vec<Segment>,
    write_end: Option<f64>,
    read_start: Option<f64>,
}

impl ControlSchedule {
    pub fn from_segments(segments: Vec<Segment>) -> Result<Self> {
        let s = ControlSchedule {
            segments,
            write_end: None,
            read_start: None,
        };
        s.validate()?;
        Ok(s)
    }

    /// Control held at `omega` for `duration` (slow light).
    pub fn continuous(duration: f64, omega: f64) -> Result<Self> {
        Self::from_segments(vec![Segment {
            t_start: 0.0,
            t_end: duration,
            shape: Shape::Constant(omega),
        }])
    }

    /// No control at all (two-level absorber).
    pub fn off(duration: f64) -> Result<Self> {
        Self::from_segments(vec![Segment {
            t_start: 0.0,
            t_end: duration,
            shape: Shape::Off,
        }])
    }

    /// Write window `[0, write_len]` ending in a ramp down, dark storage of
    /// `storage`, then a read window of `read_len` starting with a ramp up.
    pub fn store_retrieve(
        write_len: f64,
        omega_write: f64,
        storage: f64,
        read_len: f64,
        omega_read: f64,
        ramp: f64,
    ) -> Result<Self> {
        if !(ramp > 0.0 && write_len > ramp && read_len > ramp) {
            return domain(format!(
                "windows ({write_len}, {read_len}) must be longer than the ramp {ramp} > 0"
            ));
        }
        if !(storage >= 0.0) {
            return domain("storage time must be >= 0");
        }
        let mut segs = vec![
            Segment {
                t_start: 0.0,
                t_end: write_len - ramp,
                shape: Shape::Constant(omega_write),
            },
            Segment {
                t_start: write_len - ramp,
                t_end: write_len,
                shape: Shape::RampDown(omega_write),
            },
        ];
        let read_start = write_len + storage;
        if storage > 0.0 {
            segs.push(Segment {
                t_start: write_len,
                t_end: read_start,
                shape: Shape::Off,
            });
        }
        segs.push(Segment {
            t_start: read_start,
            t_end: read_start + ramp,
            shape: Shape::RampUp(omega_read),
        });
        segs.push(Segment {
            t_start: read_start + ramp,
            t_end: read_start + read_len,
            shape: Shape::Constant(omega_read),
        });
        let s = ControlSchedule {
            segments: segs,
            write_end: Some(write_len),
            read_start: Some(read_start),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return domain("control schedule has no segments");
        }
        if self.segments[0].t_start != 0.0 {
            return domain("control schedule must start at t = 0");
        }
        for seg in &self.segments {
            if !(seg.t_end > seg.t_start) {
                return domain(format!("empty or reversed segment {seg:?}"));
            }
            if !(seg.peak() >= 0.0 && seg.peak().is_finite()) {
                return domain(format!("control must be finite and >= 0 in {seg:?}"));
            }
        }
        for w in self.segments.windows(2) {
            let gap = (w[1].t_start - w[0].t_end).abs();
            if gap > 1e-12 * w[0].t_end.abs().max(1.0) {
                return domain("segments must be contiguous and non-overlapping");
            }
        }
        if let (Some(we), Some(rs)) = (self.write_end, self.read_start) {
            if rs < we {
                return domain("read must start after writing ends");
            }
            for seg in &self.segments {
                if seg.t_start < rs && seg.t_end > we && seg.shape != Shape::Off {
                    return domain("control must be off during storage");
                }
            }
        }
        Ok(())
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn end(&self) -> f64 {
        self.segments.last().map(|s| s.t_end).unwrap_or(0.0)
    }

    pub fn omega_at(&self, t: f64) -> f64 {
        // segments are few; linear scan
        for seg in &self.segments {
            if t < seg.t_end {
                return if t >= seg.t_start { seg.omega_at(t) } else { 0.0 };
            }
        }
        self.segments
            .last()
            .map(|s| s.omega_at(s.t_end))
            .unwrap_or(0.0)
    }

    pub fn max_omega(&self) -> f64 {
        self.segments.iter().map(|s| s.peak()).fold(0.0, f64::max)
    }

    pub fn write_end(&self) -> Option<f64> {
        self.write_end
    }

    pub fn read_start(&self) -> Option<f64> {
        self.read_start
    }

    pub fn storage_time(&self) -> Option<f64> {
        Some(self.read_start? - self.write_end?)
    }

    /// Dark intervals (control identically zero), merged.
    pub fn dark_intervals(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        for seg in self.segments.iter().filter(|s| s.shape == Shape::Off) {
            match out.last_mut() {
                Some(last) if (last.1 - seg.t_start).abs() < 1e-12 => last.1 = seg.t_end,
                _ => out.push((seg.t_start, seg.t_end)),
            }
        }
        out
    }
}
