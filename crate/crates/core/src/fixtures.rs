//! Domains bundled with the library.

/// Three-level air-combat domain with twelve default worlds.
pub const AIR_COMBAT: &str = include_str!("../fixtures/air_combat.toml");

/// Two-level tea domain; four worlds, small enough to trace by hand.
pub const TUTORIAL: &str = include_str!("../fixtures/tutorial.toml");

/// Combination lock with twelve codes: every plan is incompatible with
/// every other world, so reuse never succeeds.
pub const WORST_CASE: &str = include_str!("../fixtures/worst_case.toml");
