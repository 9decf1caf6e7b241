//! TOML run configuration: a few global keys and exactly one experiment
//! section named after the subcommand.

use std::path::{Path, PathBuf};

use dowsim_core::experiments::{DoubleSlitConfig, EntangledConfig, WhichPath, TABLE_WIDTHS_NM};
use dowsim_core::{
    gaussian_packet, AdditiveMap, Barrier, CollapseOperator, CollapsePolicy, DeformationParams, GridSpec,
    InteractionEvent, Position, Potential, Slit, UnitSystem, Wavefield,
};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Evolve,
    Trajectory,
    DoubleSlit,
    BornCheck,
    LocalizationTable,
    Compare,
    Entangle,
}

impl Kind {
    /// Section name in the config file.
    pub fn section(self) -> &'static str {
        match self {
            Kind::Evolve => "evolve",
            Kind::Trajectory => "trajectory",
            Kind::DoubleSlit => "double_slit",
            Kind::BornCheck => "born_check",
            Kind::LocalizationTable => "localization_table",
            Kind::Compare => "compare",
            Kind::Entangle => "entangle",
        }
    }

    pub fn command(self) -> &'static str {
        match self {
            Kind::Evolve => "evolve",
            Kind::Trajectory => "trajectory",
            Kind::DoubleSlit => "double-slit",
            Kind::BornCheck => "born-check",
            Kind::LocalizationTable => "localization-table",
            Kind::Compare => "compare",
            Kind::Entangle => "entangle",
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    /// `natural` or `si-electron`.
    pub units: Option<String>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub evolve: Option<EvolveSection>,
    pub trajectory: Option<TrajectorySection>,
    #[serde(alias = "double-slit")]
    pub double_slit: Option<DoubleSlitSection>,
    #[serde(alias = "born-check")]
    pub born_check: Option<BornSection>,
    #[serde(alias = "localization-table")]
    pub localization_table: Option<LocalizationSection>,
    pub compare: Option<CompareSection>,
    pub entangle: Option<EntangleSection>,
    /// Directory of the config file, for resolving relative paths.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::config(e.to_string()))
    }

    fn present(&self) -> Vec<&'static str> {
        let flags = [
            (self.evolve.is_some(), Kind::Evolve),
            (self.trajectory.is_some(), Kind::Trajectory),
            (self.double_slit.is_some(), Kind::DoubleSlit),
            (self.born_check.is_some(), Kind::BornCheck),
            (self.localization_table.is_some(), Kind::LocalizationTable),
            (self.compare.is_some(), Kind::Compare),
            (self.entangle.is_some(), Kind::Entangle),
        ];
        flags.iter().filter(|(on, _)| *on).map(|(_, k)| k.section()).collect()
    }

    /// A file must hold exactly one experiment section, matching `kind`.
    /// Without a file every section takes its defaults.
    pub fn check_section(&self, kind: Kind, from_file: bool) -> CliResult<()> {
        let present = self.present();
        if present.len() > 1 {
            return Err(CliError::config(format!(
                "expected exactly one experiment section, found {}",
                present.join(", ")
            )));
        }
        match present.first() {
            Some(&s) if s != kind.section() => Err(CliError::config(format!(
                "config has a [{s}] section but the command is '{}'",
                kind.command()
            ))),
            None if from_file => Err(CliError::config(format!(
                "config has no experiment section; expected [{}]",
                kind.section()
            ))),
            _ => Ok(()),
        }
    }

    pub fn units(&self) -> CliResult<UnitSystem> {
        match &self.units {
            None => Ok(UnitSystem::natural()),
            Some(label) => Ok(UnitSystem::parse(label)?),
        }
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}

fn position(v: &[f64], what: &str) -> CliResult<Position> {
    Position::from_slice(v).map_err(|_| CliError::config(format!("{what} needs 1 or 2 coordinates, got {}", v.len())))
}

fn pair(v: &[f64], what: &str) -> CliResult<[f64; 2]> {
    match *v {
        [a] => Ok([a, 0.0]),
        [a, b] => Ok([a, b]),
        _ => Err(CliError::config(format!(
            "{what} needs 1 or 2 components, got {}",
            v.len()
        ))),
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default = "one")]
    pub dim: usize,
    pub n: usize,
    pub x_min: f64,
    pub x_max: f64,
}

fn one() -> usize {
    1
}

impl GridSection {
    pub fn build(&self) -> CliResult<GridSpec> {
        Ok(GridSpec::new(self.dim, self.n, self.x_min, self.x_max)?)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketSection {
    pub center: Vec<f64>,
    pub sigma: f64,
    #[serde(default)]
    pub k0: Vec<f64>,
}

impl PacketSection {
    pub fn build(&self, grid: GridSpec) -> CliResult<Wavefield> {
        let k0 = if self.k0.is_empty() {
            [0.0; 2]
        } else {
            pair(&self.k0, "packet.k0")?
        };
        Ok(gaussian_packet(
            grid,
            position(&self.center, "packet.center")?,
            self.sigma,
            k0,
        )?)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlitSection {
    pub center: f64,
    pub width: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarrierSection {
    pub position: f64,
    pub thickness: f64,
    pub height: f64,
    #[serde(default)]
    pub slits: Vec<SlitSection>,
}

impl BarrierSection {
    pub fn build(&self) -> Barrier {
        Barrier {
            position: self.position,
            thickness: self.thickness,
            height: self.height,
            slits: self
                .slits
                .iter()
                .map(|s| Slit {
                    center: s.center,
                    width: s.width,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSection {
    #[default]
    Free,
    Harmonic {
        stiffness: f64,
        #[serde(default)]
        center: Vec<f64>,
    },
    Barrier(BarrierSection),
}

impl PotentialSection {
    pub fn build(&self) -> CliResult<Potential> {
        Ok(match self {
            PotentialSection::Free => Potential::Free,
            PotentialSection::Harmonic { stiffness, center } => Potential::Harmonic {
                stiffness: *stiffness,
                center: if center.is_empty() {
                    Position::default()
                } else {
                    position(center, "potential.center")?
                },
            },
            PotentialSection::Barrier(b) => Potential::HardBarrierWithSlits(b.build()),
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveSection {
    pub grid: GridSection,
    pub packet: PacketSection,
    #[serde(default)]
    pub potential: PotentialSection,
    pub dt: f64,
    pub steps: usize,
    /// Write a heatmap every this many steps; 0 disables.
    #[serde(default)]
    pub heatmap_every: usize,
}

impl Default for EvolveSection {
    fn default() -> Self {
        Self {
            grid: GridSection {
                dim: 1,
                n: 256,
                x_min: -16.0,
                x_max: 16.0,
            },
            packet: PacketSection {
                center: vec![0.0],
                sigma: 1.0,
                k0: vec![0.0],
            },
            potential: PotentialSection::Free,
            dt: 0.01,
            steps: 200,
            heatmap_every: 0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventSection {
    pub t: f64,
    pub center: Vec<f64>,
    pub extent: f64,
    pub energy: f64,
    /// Restricts the window to a slab across this axis.
    pub axis: Option<usize>,
}

impl EventSection {
    pub fn build(&self) -> CliResult<InteractionEvent> {
        let e = InteractionEvent::new(
            self.t,
            position(&self.center, "event.center")?,
            self.extent,
            self.energy,
        );
        Ok(match self.axis {
            Some(a) => e.on_axis(a),
            None => e,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    #[default]
    Gaussian,
    Delta,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OperatorSection {
    #[serde(default)]
    pub shape: OperatorKind,
    /// Defaults to two grid spacings.
    pub sigma_c: Option<f64>,
}

impl OperatorSection {
    pub fn build(&self, grid: &GridSpec) -> CliResult<CollapseOperator> {
        let op = match self.shape {
            OperatorKind::Delta => CollapseOperator::delta_like(),
            OperatorKind::Gaussian => match self.sigma_c {
                Some(s) => CollapseOperator::gaussian(s),
                None => CollapseOperator::default_for(grid),
            },
        };
        op.validate(grid)?;
        Ok(op)
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(tag = "criterion", rename_all = "snake_case", deny_unknown_fields)]
pub enum CriterionSection {
    #[default]
    Simple,
    Indicator {
        epsilon_c: f64,
        deformation_constant: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ModeKind {
    #[default]
    Multiplicative,
    Additive,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeformationSection {
    #[serde(default = "unit_gamma")]
    pub gamma: f64,
    #[serde(default)]
    pub mode: ModeKind,
}

fn unit_gamma() -> f64 {
    1.0
}

impl Default for DeformationSection {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            mode: ModeKind::Multiplicative,
        }
    }
}

impl DeformationSection {
    pub fn build(&self) -> CliResult<DeformationParams> {
        Ok(match self.mode {
            ModeKind::Multiplicative => DeformationParams::multiplicative(self.gamma)?,
            ModeKind::Additive => DeformationParams::additive(self.gamma, AdditiveMap::Power)?,
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySection {
    pub grid: GridSection,
    pub packet: PacketSection,
    #[serde(default)]
    pub potential: PotentialSection,
    pub dt: f64,
    pub steps: usize,
    #[serde(default)]
    pub events: Vec<EventSection>,
    #[serde(default)]
    pub collapse: CriterionSection,
    #[serde(default)]
    pub operator: OperatorSection,
    #[serde(default)]
    pub deformation: DeformationSection,
    /// Write a heatmap of the final field.
    #[serde(default)]
    pub heatmap: bool,
}

impl Default for TrajectorySection {
    fn default() -> Self {
        let EvolveSection {
            grid,
            packet,
            potential,
            dt,
            steps,
            ..
        } = EvolveSection::default();
        // sigma = 1 gives a threshold of 1/8: one deformation, then a collapse.
        Self {
            grid,
            packet,
            potential,
            dt,
            steps,
            events: vec![
                EventSection {
                    t: 0.5,
                    center: vec![0.0],
                    extent: 1.0,
                    energy: 0.05,
                    axis: None,
                },
                EventSection {
                    t: 1.0,
                    center: vec![0.0],
                    extent: 1.0,
                    energy: 1.0,
                    axis: None,
                },
            ],
            collapse: CriterionSection::Simple,
            operator: OperatorSection::default(),
            deformation: DeformationSection::default(),
            heatmap: false,
        }
    }
}

impl TrajectorySection {
    pub fn policy(&self, units: UnitSystem, grid: &GridSpec) -> CliResult<CollapsePolicy> {
        let op = self.operator.build(grid)?;
        Ok(match self.collapse {
            CriterionSection::Simple => CollapsePolicy::simple(units, op),
            CriterionSection::Indicator {
                epsilon_c,
                deformation_constant,
            } => CollapsePolicy::indicator(units, op, epsilon_c, deformation_constant)?,
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WhichPathSection {
    /// Absolute energy per detector.
    pub energy: Option<f64>,
    /// Energy as a multiple of the collapse threshold when the packet
    /// reaches the slits.
    pub threshold_fraction: Option<f64>,
    pub extent: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub extent: f64,
    pub fractions: Vec<f64>,
}

/// Every key is optional and falls back to the built-in setup.
#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct DoubleSlitSection {
    pub n: Option<usize>,
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub packet_center: Option<Vec<f64>>,
    pub packet_sigma: Option<f64>,
    pub packet_k: Option<Vec<f64>>,
    pub barrier: Option<BarrierSection>,
    pub screen_x: Option<f64>,
    pub screen_depth: Option<f64>,
    pub which_path: Option<WhichPathSection>,
    pub operator: Option<OperatorSection>,
    pub deformation: Option<DeformationSection>,
    pub dt: Option<f64>,
    pub t_max: Option<f64>,
    pub shots: Option<usize>,
    /// Heatmap of the field at detection time.
    #[serde(default)]
    pub heatmap: bool,
    /// Visibility against detector energy, in units of the threshold.
    pub sweep: Option<SweepSection>,
}

impl DoubleSlitSection {
    /// The experiment config, with which-path detectors still unset.
    pub fn build(&self, units: UnitSystem, seed: u64) -> CliResult<DoubleSlitConfig> {
        let mut cfg = DoubleSlitConfig {
            units,
            seed0: seed,
            ..DoubleSlitConfig::default()
        };
        if self.n.is_some() || self.x_min.is_some() || self.x_max.is_some() {
            let g = cfg.grid;
            cfg.grid = GridSpec::square(
                self.n.unwrap_or(g.n()),
                self.x_min.unwrap_or(g.x_min()),
                self.x_max.unwrap_or(g.x_max()),
            )?;
            cfg.operator = CollapseOperator::default_for(&cfg.grid);
        }
        if let Some(c) = &self.packet_center {
            cfg.packet_center = position(c, "packet_center")?;
        }
        if let Some(s) = self.packet_sigma {
            cfg.packet_sigma = s;
        }
        if let Some(k) = &self.packet_k {
            cfg.packet_k = pair(k, "packet_k")?;
        }
        if let Some(b) = &self.barrier {
            cfg.barrier = b.build();
        }
        if let Some(x) = self.screen_x {
            cfg.screen_x = x;
        }
        if let Some(d) = self.screen_depth {
            cfg.screen_depth = d;
        }
        if let Some(op) = &self.operator {
            cfg.operator = op.build(&cfg.grid)?;
        }
        if let Some(d) = &self.deformation {
            cfg.deformation = d.build()?;
        }
        if let Some(dt) = self.dt {
            cfg.dt = dt;
        }
        if let Some(t) = self.t_max {
            cfg.t_max = t;
        }
        if let Some(n) = self.shots {
            cfg.n_shots = n;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Resolves the detector energy, which may be relative to the threshold
    /// at the slits.
    pub fn which_path(&self, threshold: impl FnOnce() -> CliResult<f64>) -> CliResult<Option<WhichPath>> {
        let Some(wp) = &self.which_path else { return Ok(None) };
        let energy = match (wp.energy, wp.threshold_fraction) {
            (Some(e), None) => e,
            (None, Some(f)) => f * threshold()?,
            _ => {
                return Err(CliError::config(
                    "which_path needs exactly one of 'energy' and 'threshold_fraction'",
                ))
            }
        };
        Ok(Some(WhichPath {
            energy,
            extent: wp.extent,
        }))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BornField {
    Gaussian {
        center: f64,
        sigma: f64,
    },
    /// Two well separated Gaussians; `left_weight` of the mass sits in the
    /// left one.
    TwoPeak {
        left: f64,
        right: f64,
        sigma: f64,
        left_weight: f64,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BornSection {
    pub grid: GridSection,
    pub field: BornField,
    pub draws: usize,
}

impl Default for BornSection {
    fn default() -> Self {
        // 64 cells: the TV noise floor grows with the square root of the
        // number of occupied cells, so finer grids need more draws.
        Self {
            grid: GridSection {
                dim: 1,
                n: 64,
                x_min: -8.0,
                x_max: 8.0,
            },
            field: BornField::Gaussian {
                center: 0.0,
                sigma: 1.0,
            },
            draws: 100_000,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalizationSection {
    #[serde(default = "default_widths")]
    pub widths_nm: Vec<f64>,
}

fn default_widths() -> Vec<f64> {
    TABLE_WIDTHS_NM.to_vec()
}

impl Default for LocalizationSection {
    fn default() -> Self {
        Self {
            widths_nm: default_widths(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct CompareSection {
    /// CSV of ranks; the bundled table when absent.
    pub ranks: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct EntangleSection {
    pub n: Option<usize>,
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub s: Option<f64>,
    pub big_s: Option<f64>,
    pub event_center: Option<f64>,
    pub event_extent: Option<f64>,
    pub event_energy: Option<f64>,
    pub operator: Option<OperatorSection>,
    pub shots: Option<usize>,
    pub marginal_bin_cells: Option<usize>,
}

impl EntangleSection {
    pub fn build(&self, units: UnitSystem, seed: u64) -> CliResult<EntangledConfig> {
        let mut cfg = EntangledConfig {
            units,
            seed0: seed,
            ..EntangledConfig::default()
        };
        if self.n.is_some() || self.x_min.is_some() || self.x_max.is_some() {
            let g = cfg.grid;
            cfg.grid = GridSpec::square(
                self.n.unwrap_or(g.n()),
                self.x_min.unwrap_or(g.x_min()),
                self.x_max.unwrap_or(g.x_max()),
            )?;
            cfg.operator = CollapseOperator::default_for(&cfg.grid);
        }
        macro_rules! set {
            ($($field:ident => $target:ident),*) => {
                $(if let Some(v) = self.$field { cfg.$target = v; })*
            };
        }
        set!(s => s, big_s => big_s, event_center => event_center, event_extent => event_extent,
             event_energy => event_energy, shots => n_shots, marginal_bin_cells => marginal_bin_cells);
        if let Some(op) = &self.operator {
            cfg.operator = op.build(&cfg.grid)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_section_only() {
        let cfg = RunConfig::parse("[compare]\n[entangle]\n").unwrap();
        assert!(matches!(
            cfg.check_section(Kind::Compare, true),
            Err(CliError::Config(_))
        ));
        let cfg = RunConfig::parse("seed = 3\n").unwrap();
        assert!(cfg.check_section(Kind::Compare, true).is_err());
        assert!(cfg.check_section(Kind::Compare, false).is_ok());
        let cfg = RunConfig::parse("[compare]\n").unwrap();
        assert!(cfg.check_section(Kind::Entangle, true).is_err());
        assert!(cfg.check_section(Kind::Compare, true).is_ok());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::parse("[compare]\nranx = 'a.csv'\n").is_err());
        assert!(RunConfig::parse("colour = 1\n").is_err());
    }

    #[test]
    fn hyphenated_section_names() {
        let cfg = RunConfig::parse("[localization-table]\nwidths_nm = [0.5]\n").unwrap();
        assert_eq!(cfg.localization_table.unwrap().widths_nm, vec![0.5]);
    }

    #[test]
    fn potential_kinds() {
        let cfg = RunConfig::parse(
            "[evolve]\ndt = 0.01\nsteps = 1\ngrid = { n = 64, x_min = -8.0, x_max = 8.0 }\n\
             packet = { center = [0.0], sigma = 1.0 }\npotential = { kind = 'harmonic', stiffness = 2.0 }\n",
        )
        .unwrap();
        let p = cfg.evolve.unwrap().potential.build().unwrap();
        assert_eq!(p, Potential::harmonic(2.0));
    }

    #[test]
    fn which_path_needs_one_energy() {
        let s: DoubleSlitSection = toml::from_str("which_path = { extent = 1.0 }").unwrap();
        assert!(s.which_path(|| Ok(1.0)).is_err());
        let s: DoubleSlitSection = toml::from_str("which_path = { extent = 1.0, threshold_fraction = 2.0 }").unwrap();
        assert_eq!(s.which_path(|| Ok(0.5)).unwrap().unwrap().energy, 1.0);
    }
}
