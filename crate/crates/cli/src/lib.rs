//! Library side of the `carpet` binary: configs, run directories and the
//! five commands.

pub mod build;
pub mod config;
pub mod mixing;
pub mod periodic;
pub mod render;
pub mod run;
pub mod spec;

/// What a command reports back to `main`.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// `false` when a checked property failed; the process exits with 1.
    pub passed: bool,
    pub summary: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Periodic,
    Build,
    Render,
    Mixing,
    Spec,
}

/// Run one command into the directory `out`.
pub fn dispatch(
    command: Command,
    config: Option<&std::path::Path>,
    seed: u64,
    out: &std::path::Path,
) -> anyhow::Result<Outcome> {
    match command {
        Command::Periodic => periodic::run(config, seed, out),
        Command::Build => build::run(config, seed, out),
        Command::Render => render::run(config, seed, out),
        Command::Mixing => mixing::run(config, seed, out),
        Command::Spec => spec::run(config, seed, out),
    }
}
