//! `gda gen-game`: materialize a payoff matrix to the plain-text format
//! (header "m n", then rows at 17 significant digits). Passing an existing
//! matrix file round-trips it byte-for-byte.

use serde::Serialize;

use crate::args::GenGameArgs;
use crate::common::{resolve_game, Ctx, GameChoice, Manifest};
use crate::error::CliResult;

#[derive(Serialize)]
struct GenGameParams {
    game: GameChoice,
    out_file: std::path::PathBuf,
}

pub fn execute(ctx: &Ctx, args: &GenGameArgs) -> CliResult<()> {
    let (a, choice) = resolve_game(&args.game, &ctx.file.game, ctx.seed)?;
    let dir = ctx.command_dir("gen-game")?;
    let out_file = args.out_file.clone().unwrap_or_else(|| dir.join("game.txt"));
    if let Some(parent) = out_file.parent() {
        std::fs::create_dir_all(parent)?;
    }
    a.write_file(&out_file)?;
    Manifest::new(ctx, "gen-game", &GenGameParams { game: choice, out_file: out_file.clone() })?
        .write(&dir)?;
    println!("gen-game: {}x{} matrix -> {}", a.rows(), a.cols(), out_file.display());
    Ok(())
}
