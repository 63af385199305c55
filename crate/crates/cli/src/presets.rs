//! Bundled scenarios, compiled into the binary so `--preset <name>` works
//! without any files on disk.

pub struct Preset {
    pub name: &'static str,
    /// Subcommand the scenario belongs to: "run", "sweep", or "population".
    pub command: &'static str,
    pub text: &'static str,
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "fig3_fixed_recommendation",
        command: "run",
        text: include_str!("../presets/fig3_fixed_recommendation.toml"),
    },
    Preset {
        name: "fig4_explore_periodically",
        command: "run",
        text: include_str!("../presets/fig4_explore_periodically.toml"),
    },
    Preset {
        name: "fig3d_population",
        command: "population",
        text: include_str!("../presets/fig3d_population.toml"),
    },
    Preset {
        name: "appendixB_alpha_sweep",
        command: "sweep",
        text: include_str!("../presets/appendixB_alpha_sweep.toml"),
    },
    Preset {
        name: "appendixB_x0_sweep",
        command: "sweep",
        text: include_str!("../presets/appendixB_x0_sweep.toml"),
    },
    Preset {
        name: "appendixB_lambda_sweep",
        command: "sweep",
        text: include_str!("../presets/appendixB_lambda_sweep.toml"),
    },
    Preset {
        name: "appendixB_u0_sweep",
        command: "sweep",
        text: include_str!("../presets/appendixB_u0_sweep.toml"),
    },
];

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

pub fn names() -> Vec<&'static str> {
    PRESETS.iter().map(|p| p.name).collect()
}
