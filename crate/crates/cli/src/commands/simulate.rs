use std::path::{Path, PathBuf};

use microevo::batch::{self, plan_members};
use microevo::tensor_io::read_json;
use microevo::{GrainParams, SimKind, SimParams, SpinodalParams, TrajectoryManifest};
use serde::{Deserialize, Serialize};

use crate::args::{KindArg, SimulateArgs};
use crate::config::{create_dir, default_out, load, write_run_record};
use crate::failure::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub kind: SimKind,
    pub count: usize,
    pub mix_c0: bool,
    pub name: Option<String>,
    pub out: PathBuf,
    pub grain_growth: GrainParams,
    pub spinodal: SpinodalParams,
    /// Regenerate from this manifest instead of the parameters above.
    pub from_manifest: Option<PathBuf>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            kind: SimKind::GrainGrowth,
            count: 1,
            mix_c0: false,
            name: None,
            out: default_out(),
            grain_growth: GrainParams::default(),
            spinodal: SpinodalParams::default(),
            from_manifest: None,
        }
    }
}

pub fn resolve(args: SimulateArgs, config: Option<&Path>, out: Option<&Path>, seed: Option<u64>) -> CliResult<SimulateConfig> {
    let mut c: SimulateConfig = load(config)?;
    if let Some(k) = args.kind {
        c.kind = match k {
            KindArg::GrainGrowth => SimKind::GrainGrowth,
            KindArg::Spinodal => SimKind::Spinodal,
        };
    }
    let (gg, sp) = (&mut c.grain_growth, &mut c.spinodal);
    if let Some(n) = args.count {
        c.count = n;
    }
    if let Some(n) = args.frames {
        gg.frames_to_record = n;
        sp.frames_to_record = n;
    }
    if let Some((h, w)) = args.grid {
        (gg.height, gg.width) = (h, w);
        (sp.height, sp.width) = (h, w);
    }
    if let Some(s) = seed {
        gg.seed = s;
        sp.seed = s;
    }
    if let Some(s) = args.stride {
        gg.record_stride = s;
    }
    if let Some(n) = args.n_grains {
        gg.n_grains = n;
    }
    if let Some(dt) = args.dt {
        gg.dt = dt;
    }
    if let Some(t) = args.frame_interval {
        sp.frame_interval = t;
    }
    if let Some(c0) = args.c0 {
        sp.c0 = c0;
    }
    c.mix_c0 |= args.mix_c0;
    if args.name.is_some() {
        c.name = args.name;
    }
    if args.from_manifest.is_some() {
        c.from_manifest = args.from_manifest;
    }
    if let Some(o) = out {
        c.out = o.to_path_buf();
    }
    if c.mix_c0 && c.kind != SimKind::Spinodal {
        return Err(CliError::Config("mix_c0 applies to spinodal runs only".into()));
    }
    Ok(c)
}

pub fn run(args: SimulateArgs, config: Option<&Path>, out: Option<&Path>, seed: Option<u64>) -> CliResult<()> {
    let cfg = resolve(args, config, out, seed)?;
    let (manifest, name) = match &cfg.from_manifest {
        Some(path) => {
            let m: TrajectoryManifest = read_json(path)?;
            m.validate()?;
            let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned());
            (m, cfg.name.clone().or(stem).unwrap_or_else(|| "trajectories".into()))
        }
        None => {
            let params = match cfg.kind {
                SimKind::GrainGrowth => SimParams::GrainGrowth(cfg.grain_growth.clone()),
                SimKind::Spinodal => SimParams::Spinodal(cfg.spinodal.clone()),
            };
            let members = plan_members(params.seed(), cfg.count, cfg.mix_c0);
            let m = TrajectoryManifest::new(params, members)?;
            (m, cfg.name.clone().unwrap_or_else(|| cfg.kind.to_string()))
        }
    };
    log::info!("simulating {} trajectories with dims {:?}", manifest.members.len(), manifest.dims);
    let trajectories = manifest.generate()?;
    create_dir(&cfg.out)?;
    let tensor = cfg.out.join(format!("{name}.msev"));
    batch::write_trajectories(&tensor, &manifest, &trajectories)?;
    let outputs = vec![
        tensor.display().to_string(),
        batch::manifest_path(&tensor).display().to_string(),
    ];
    write_run_record(&cfg.out, "simulate", &cfg, &outputs)?;
    println!("wrote {} with dims {:?}", tensor.display(), manifest.dims);
    Ok(())
}
