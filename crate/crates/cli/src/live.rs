//! Read-only terminal view of incoming samples: one bar meter per channel,
//! colored by the intensity ramp.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::{Duration, Instant};

use solesense::synth::{GaitPhase, PressureSample};
use solesense::SoleChannel;

use crate::plot::ramp;

const BAR_WIDTH: usize = 32;
const REFRESH: Duration = Duration::from_millis(100);

pub fn bar(pressure_pa: f64, full_scale_pa: f64) -> String {
    let x = if full_scale_pa > 0.0 {
        (pressure_pa / full_scale_pa).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let filled = (x * BAR_WIDTH as f64).round() as usize;
    let (r, g, b) = ramp(x);
    format!(
        "\x1b[38;2;{r};{g};{b}m{}\x1b[0m{}",
        "█".repeat(filled),
        "·".repeat(BAR_WIDTH - filled)
    )
}

/// One device's block of the view.
pub fn render_device(device: u8, sample: &PressureSample, phase: Option<GaitPhase>, full_scale_pa: f64) -> String {
    let mut out = format!("device {device}  t = {:>9.3} s", sample.timestamp);
    if let Some(p) = phase {
        out.push_str(&format!("  phase {p:?}"));
    }
    out.push('\n');
    for ch in SoleChannel::ALL {
        let pa = sample.channels[ch].pascals();
        out.push_str(&format!(
            "  {:<16} {} {:>7.1} kPa\n",
            ch.label(),
            bar(pa, full_scale_pa),
            pa / 1000.0
        ));
    }
    out
}

pub struct LiveView {
    full_scale_pa: f64,
    latest: BTreeMap<u8, (PressureSample, Option<GaitPhase>)>,
    last_draw: Option<Instant>,
}

impl LiveView {
    pub fn new(full_scale_pa: f64) -> Self {
        LiveView {
            full_scale_pa,
            latest: BTreeMap::new(),
            last_draw: None,
        }
    }

    pub fn update(&mut self, device: u8, sample: PressureSample, phase: Option<GaitPhase>) {
        self.latest.insert(device, (sample, phase));
        if self.last_draw.is_none_or(|t| t.elapsed() >= REFRESH) {
            self.draw();
        }
    }

    pub fn draw(&mut self) {
        self.last_draw = Some(Instant::now());
        let mut frame = String::from("\x1b[H\x1b[2J");
        for (device, (sample, phase)) in &self.latest {
            frame.push_str(&render_device(*device, sample, *phase, self.full_scale_pa));
        }
        let mut err = std::io::stderr().lock();
        let _ = err.write_all(frame.as_bytes());
        let _ = err.flush();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use solesense::Pressure;

    #[test]
    fn bars_scale_and_color() {
        let empty = bar(0.0, 750e3);
        assert!(empty.starts_with("\x1b[38;2;0;180;0m\x1b[0m"));
        assert_eq!(empty.matches('·').count(), BAR_WIDTH);
        let full = bar(1e9, 750e3);
        assert!(full.starts_with("\x1b[38;2;0;0;255m"));
        assert_eq!(full.matches('█').count(), BAR_WIDTH);
    }

    #[test]
    fn device_block_lists_all_channels() {
        let mut s = PressureSample::zero(1.25);
        s.channels[SoleChannel::Heel] = Pressure::new(375e3).unwrap();
        let text = render_device(3, &s, Some(GaitPhase::LoadingResponse), 750e3);
        assert_eq!(text.lines().count(), 6);
        assert!(text.contains("LoadingResponse"));
        assert!(text.contains("375.0 kPa"));
    }
}
