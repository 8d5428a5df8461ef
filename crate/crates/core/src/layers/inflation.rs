use serde::{Deserialize, Serialize};

use super::{CellBounds, Layer, LayerEffect, LayerError, LayerInputs, LayerKind};
use crate::grid::{CostGrid, FREE, INSCRIBED, LETHAL, MAX_INFLATED};

/// Slack used when comparing distances against the configured radii, meters.
const RADIUS_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InflationConfig {
    pub inscribed_radius: f64,
    pub inflation_radius: f64,
    /// Exponential decay rate beyond the inscribed radius, 1/meters.
    pub cost_scaling: f64,
}

impl Default for InflationConfig {
    fn default() -> Self {
        Self {
            inscribed_radius: 0.3,
            inflation_radius: 0.55,
            cost_scaling: 10.0,
        }
    }
}

impl InflationConfig {
    pub fn validate(&self) -> Result<(), LayerError> {
        let ok = self.inscribed_radius > 0.0
            && self.inflation_radius >= self.inscribed_radius
            && self.inflation_radius.is_finite()
            && self.cost_scaling >= 0.0
            && self.cost_scaling.is_finite();
        if ok {
            Ok(())
        } else {
            Err(LayerError::InvalidConfig {
                layer: "inflation",
                reason: format!("{self:?}"),
            })
        }
    }
}

/// Cost a cell receives from a lethal cell `distance` meters away.
///
/// Returns FREE beyond the inflation radius.
pub fn inflation_cost(distance: f64, config: &InflationConfig) -> u8 {
    if distance <= 0.0 {
        LETHAL
    } else if distance <= config.inscribed_radius + RADIUS_EPS {
        INSCRIBED
    } else if distance <= config.inflation_radius + RADIUS_EPS {
        let c = f64::from(MAX_INFLATED)
            * (-config.cost_scaling * (distance - config.inscribed_radius)).exp();
        c.floor().clamp(0.0, f64::from(MAX_INFLATED)) as u8
    } else {
        FREE
    }
}

/// Spreads decaying cost around lethal cells.
///
/// Each lethal cell stamps a precomputed disc of costs and every cell keeps
/// the maximum, which equals the cost at its nearest lethal cell because the
/// cost is non-increasing in distance. Lethal cells whose four neighbours are
/// all lethal are skipped: some edge cell is always at least as close.
pub struct InflationLayer {
    config: InflationConfig,
    enabled: bool,
    kernel: Vec<(i64, i64, u8)>,
    kernel_resolution: f64,
    sources: Vec<usize>,
}

impl InflationLayer {
    pub fn new(config: InflationConfig) -> Result<Self, LayerError> {
        config.validate()?;
        Ok(Self {
            config,
            enabled: true,
            kernel: Vec::new(),
            kernel_resolution: f64::NAN,
            sources: Vec::new(),
        })
    }

    pub fn config(&self) -> &InflationConfig {
        &self.config
    }

    pub fn inflation_update(&mut self, master: &mut CostGrid) -> Result<(), LayerError> {
        let inputs = LayerInputs::default();
        if let Some(b) = self.bounds(master, &inputs)? {
            self.update_costs(master, b, &inputs)?;
        }
        Ok(())
    }

    fn rebuild_kernel(&mut self, resolution: f64) {
        if self.kernel_resolution == resolution {
            return;
        }
        let reach = (self.config.inflation_radius / resolution + 1e-6).ceil() as i64;
        self.kernel.clear();
        for dy in -reach..=reach {
            for dx in -reach..=reach {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let d = ((dx * dx + dy * dy) as f64).sqrt() * resolution;
                let cost = inflation_cost(d, &self.config);
                if cost > FREE {
                    self.kernel.push((dx, dy, cost));
                }
            }
        }
        self.kernel_resolution = resolution;
    }
}

impl Layer for InflationLayer {
    fn name(&self) -> &str {
        "inflation"
    }

    fn kind(&self) -> LayerKind {
        LayerKind::Inflation
    }

    fn enabled(&self) -> bool {
        self.enabled
    }

    fn set_enabled(&mut self, enabled: bool) {
        self.enabled = enabled;
    }

    fn bounds(
        &mut self,
        master: &CostGrid,
        _inputs: &LayerInputs<'_>,
    ) -> Result<Option<CellBounds>, LayerError> {
        self.sources.clear();
        let (w, h) = (master.width(), master.height());
        let cells = master.cells();
        for row in 0..h {
            for col in 0..w {
                let i = row * w + col;
                if cells[i] != LETHAL {
                    continue;
                }
                let interior = col > 0
                    && row > 0
                    && col + 1 < w
                    && row + 1 < h
                    && cells[i - 1] == LETHAL
                    && cells[i + 1] == LETHAL
                    && cells[i - w] == LETHAL
                    && cells[i + w] == LETHAL;
                if !interior {
                    self.sources.push(i);
                }
            }
        }
        if self.sources.is_empty() {
            return Ok(None);
        }
        Ok(Some(CellBounds::full(master)))
    }

    fn update_costs(
        &mut self,
        master: &mut CostGrid,
        _bounds: CellBounds,
        _inputs: &LayerInputs<'_>,
    ) -> Result<LayerEffect, LayerError> {
        self.rebuild_kernel(master.resolution());
        let (w, h) = (master.width() as i64, master.height() as i64);
        let cells = master.cells_mut();
        for &s in &self.sources {
            let (sc, sr) = (s as i64 % w, s as i64 / w);
            for &(dx, dy, cost) in &self.kernel {
                let (c, r) = (sc + dx, sr + dy);
                if c < 0 || r < 0 || c >= w || r >= h {
                    continue;
                }
                let cell = &mut cells[(r * w + c) as usize];
                if cost > *cell {
                    *cell = cost;
                }
            }
        }
        Ok(LayerEffect::default())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{CellIndex, Point2, UNKNOWN};

    #[test]
    fn closed_form_example() {
        let cfg = InflationConfig {
            inscribed_radius: 0.3,
            inflation_radius: 1.0,
            cost_scaling: 10.0,
        };
        // 252 * e^-1 = 92.70...
        assert_eq!(inflation_cost(0.4, &cfg), 92);
        assert_eq!(inflation_cost(0.0, &cfg), LETHAL);
        assert_eq!(inflation_cost(0.3, &cfg), INSCRIBED);
        assert_eq!(inflation_cost(1.01, &cfg), FREE);
    }

    #[test]
    fn inscribed_disc_around_single_lethal() {
        let cfg = InflationConfig {
            inscribed_radius: 0.3,
            inflation_radius: 0.6,
            cost_scaling: 10.0,
        };
        let mut m = CostGrid::new(41, 41, 0.05, Point2::new(0.0, 0.0), FREE).unwrap();
        m.set(CellIndex::new(20, 20), LETHAL).unwrap();
        InflationLayer::new(cfg)
            .unwrap()
            .inflation_update(&mut m)
            .unwrap();
        for row in 0..41usize {
            for col in 0..41usize {
                let (dx, dy) = (col as f64 - 20.0, row as f64 - 20.0);
                let d = (dx * dx + dy * dy).sqrt() * 0.05;
                let v = m.get(CellIndex::new(col, row)).unwrap();
                if d == 0.0 {
                    assert_eq!(v, LETHAL);
                } else if d <= 0.3 + 1e-9 {
                    assert!(v >= INSCRIBED, "({col},{row}) d={d} v={v}");
                } else {
                    assert!(v < INSCRIBED);
                }
            }
        }
        // Exactly six cells out along an axis is still inscribed.
        assert_eq!(m.get(CellIndex::new(26, 20)), Some(INSCRIBED));
    }

    #[test]
    fn no_lethal_is_noop() {
        let mut m = CostGrid::new(8, 8, 0.05, Point2::new(0.0, 0.0), FREE).unwrap();
        m.set(CellIndex::new(1, 1), 17).unwrap();
        let before = m.clone();
        InflationLayer::new(InflationConfig::default())
            .unwrap()
            .inflation_update(&mut m)
            .unwrap();
        assert_eq!(m, before);
    }

    #[test]
    fn unknown_cells_neither_source_nor_overwritten() {
        let mut m = CostGrid::new(9, 9, 0.05, Point2::new(0.0, 0.0), FREE).unwrap();
        m.set(CellIndex::new(4, 4), UNKNOWN).unwrap();
        m.set(CellIndex::new(0, 0), LETHAL).unwrap();
        m.set(CellIndex::new(1, 0), UNKNOWN).unwrap();
        InflationLayer::new(InflationConfig::default())
            .unwrap()
            .inflation_update(&mut m)
            .unwrap();
        assert_eq!(m.get(CellIndex::new(1, 0)), Some(UNKNOWN));
        assert_eq!(m.get(CellIndex::new(4, 4)), Some(UNKNOWN));
        assert_eq!(m.get(CellIndex::new(8, 8)), Some(FREE));
    }

    #[test]
    fn rejects_inverted_radii() {
        assert!(InflationLayer::new(InflationConfig {
            inscribed_radius: 0.5,
            inflation_radius: 0.4,
            cost_scaling: 1.0
        })
        .is_err());
        assert!(InflationLayer::new(InflationConfig {
            inscribed_radius: 0.0,
            inflation_radius: 0.4,
            cost_scaling: 1.0
        })
        .is_err());
    }

    /// Nearest-lethal brute force, written without the kernel or `inflation_cost`.
    pub(crate) fn brute_force(grid: &CostGrid, cfg: &InflationConfig) -> Vec<u8> {
        let (w, h, res) = (grid.width(), grid.height(), grid.resolution());
        let lethal: Vec<(usize, usize)> = (0..w * h)
            .filter(|&i| grid.cells()[i] == LETHAL)
            .map(|i| (i % w, i / w))
            .collect();
        let mut out = grid.cells().to_vec();
        for (i, v) in out.iter_mut().enumerate() {
            let (col, row) = (i % w, i / w);
            let d = lethal
                .iter()
                .map(|&(lc, lr)| {
                    let dx = lc as f64 - col as f64;
                    let dy = lr as f64 - row as f64;
                    (dx * dx + dy * dy).sqrt() * res
                })
                .fold(f64::INFINITY, f64::min);
            let c = if d == 0.0 {
                LETHAL
            } else if d <= cfg.inscribed_radius + 1e-9 {
                INSCRIBED
            } else if d <= cfg.inflation_radius + 1e-9 {
                (252.0 * (-cfg.cost_scaling * (d - cfg.inscribed_radius)).exp()).floor() as u8
            } else {
                FREE
            };
            *v = (*v).max(c);
        }
        out
    }

    proptest::proptest! {
        #[test]
        fn matches_brute_force(
            lethal in proptest::collection::vec((0usize..64, 0usize..64), 0..=20),
            unknown in proptest::collection::vec((0usize..64, 0usize..64), 0..10),
            res in proptest::sample::select(vec![0.05, 0.1]),
        ) {
            let mut g = CostGrid::new(64, 64, res, Point2::new(0.0, 0.0), FREE).unwrap();
            for (c, r) in unknown {
                g.set(CellIndex::new(c, r), UNKNOWN).unwrap();
            }
            for (c, r) in lethal {
                g.set(CellIndex::new(c, r), LETHAL).unwrap();
            }
            let cfg = InflationConfig::default();
            let expected = brute_force(&g, &cfg);
            InflationLayer::new(cfg).unwrap().inflation_update(&mut g).unwrap();
            proptest::prop_assert_eq!(g.cells(), &expected[..]);
        }
    }
}
