//! JSON game and map files, and the built-in `bench:` pseudo-paths.

use serde::Deserialize;

use sgve::catalog::{exshap_spec, mckinsey_spec};
use sgve::{ActionBox, Controller, GameSpec, MonotoneMap, OperatorForm, ShapleyOperator};

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Actions {
    pub x: Vec<[f64; 2]>,
    pub y: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerTag {
    P1,
    P2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Kind {
    #[default]
    General,
    Mdp,
    PerfectInfo,
    Switching,
}

/// `{states, actions: {x, y}, payoff, transition, controller?, kind?}`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameFile {
    pub states: usize,
    pub actions: Actions,
    pub payoff: Vec<String>,
    pub transition: Vec<Vec<String>>,
    #[serde(default)]
    pub controller: Option<Vec<Option<ControllerTag>>>,
    #[serde(default)]
    pub kind: Kind,
}

fn action_box(bounds: &[[f64; 2]], who: &str) -> Result<ActionBox, CliError> {
    ActionBox::new(bounds.iter().map(|b| (b[0], b[1])).collect())
        .map_err(|e| CliError::Input(format!("actions.{who}: {e}")))
}

impl GameFile {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Input(format!("game file: {e}")))
    }

    pub fn to_spec(&self) -> Result<(GameSpec, OperatorForm), CliError> {
        if self.payoff.len() != self.states {
            return Err(CliError::Input(format!(
                "{} payoff expressions for {} states",
                self.payoff.len(),
                self.states
            )));
        }
        let payoff: Vec<&str> = self.payoff.iter().map(String::as_str).collect();
        let transition: Vec<Vec<&str>> = self
            .transition
            .iter()
            .map(|r| r.iter().map(String::as_str).collect())
            .collect();
        let controller = self.controller.as_ref().map(|tags| {
            tags.iter()
                .map(|t| {
                    t.map(|t| match t {
                        ControllerTag::P1 => Controller::Player1,
                        ControllerTag::P2 => Controller::Player2,
                    })
                })
                .collect()
        });
        let spec = GameSpec::parse(
            action_box(&self.actions.x, "x")?,
            action_box(&self.actions.y, "y")?,
            &payoff,
            &transition,
            controller,
        )
        .map_err(|e| CliError::Input(e.to_string()))?;
        let form = match self.kind {
            Kind::General => OperatorForm::General,
            Kind::Mdp => OperatorForm::Mdp,
            Kind::PerfectInfo => OperatorForm::PerfectInfo,
            Kind::Switching => OperatorForm::Switching,
        };
        Ok((spec, form))
    }
}

/// A game ready to be discretized.
#[derive(Debug, Clone)]
pub struct LoadedGame {
    pub name: String,
    pub spec: GameSpec,
    pub form: OperatorForm,
}

impl LoadedGame {
    pub fn operator(&self, resolution: usize, tol: f64) -> Result<ShapleyOperator, CliError> {
        let game = self
            .spec
            .discretize_uniform(resolution)
            .map_err(|e| CliError::Input(e.to_string()))?;
        ShapleyOperator::new(game, self.form, tol).map_err(CliError::from)
    }
}

/// Names accepted after `bench:`.
pub const BENCH_GAMES: [&str; 2] = ["exshap", "mckinsey"];

/// Reads a game file, or a built-in game for `bench:exshap` and
/// `bench:mckinsey` (the latter at `z = 1`).
pub fn load_game(path: &str) -> Result<LoadedGame, CliError> {
    if let Some(name) = path.strip_prefix("bench:") {
        let spec = match name {
            "exshap" => exshap_spec(),
            "mckinsey" => mckinsey_spec(1.0),
            _ => {
                return Err(CliError::Input(format!(
                    "unknown benchmark `{name}` (known: {})",
                    BENCH_GAMES.join(", ")
                )))
            }
        };
        return Ok(LoadedGame {
            name: path.to_string(),
            spec,
            form: OperatorForm::General,
        });
    }
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{path}: {e}")))?;
    let (spec, form) = GameFile::from_json(&text)?.to_spec()?;
    Ok(LoadedGame {
        name: path.to_string(),
        spec,
        form,
    })
}

/// `{"kind": "minLinear" | "maxLinear", "sets": …}`,
/// `{"kind": "linear", "matrix": …}` or `{"kind": "explicit", "coordinates": …}`.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase", deny_unknown_fields)]
pub enum MapFile {
    MinLinear { sets: Vec<Vec<Vec<f64>>> },
    MaxLinear { sets: Vec<Vec<Vec<f64>>> },
    Linear { matrix: Vec<Vec<f64>> },
    Explicit { coordinates: Vec<String> },
}

impl MapFile {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Input(format!("map file: {e}")))
    }

    pub fn to_map(&self) -> Result<MonotoneMap, CliError> {
        let map = match self {
            MapFile::MinLinear { sets } => MonotoneMap::min_linear(sets.clone()),
            MapFile::MaxLinear { sets } => MonotoneMap::max_linear(sets.clone()),
            MapFile::Linear { matrix } => MonotoneMap::linear(matrix),
            MapFile::Explicit { coordinates } => {
                MonotoneMap::explicit(&coordinates.iter().map(String::as_str).collect::<Vec<_>>())
            }
        };
        map.map_err(|e| CliError::Input(format!("map: {e}")))
    }
}

pub fn load_map(path: &str) -> Result<MonotoneMap, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{path}: {e}")))?;
    MapFile::from_json(&text)?.to_map()
}

#[cfg(test)]
mod tests {
    use super::*;

    const CONSTANT: &str = r#"{
        "states": 2,
        "actions": {"x": [[0, 1]], "y": [[0, 1]]},
        "payoff": ["2", "2"],
        "transition": [["0.5", "0.5"], ["x/2", "1 - x/2"]]
    }"#;

    #[test]
    fn parses_a_game_file() {
        let g = GameFile::from_json(CONSTANT).unwrap();
        assert_eq!(g.kind, Kind::General);
        let (spec, form) = g.to_spec().unwrap();
        assert_eq!(spec.states(), 2);
        assert_eq!(form, OperatorForm::General);
    }

    #[test]
    fn controller_and_kind() {
        let text = r#"{
            "states": 1, "actions": {"x": [[0, 1]], "y": [[0, 1]]},
            "payoff": ["x"], "transition": [["1"]],
            "controller": ["p1"], "kind": "perfectInfo"
        }"#;
        let (spec, form) = GameFile::from_json(text).unwrap().to_spec().unwrap();
        assert_eq!(form, OperatorForm::PerfectInfo);
        assert_eq!(spec.controller(), &[Some(Controller::Player1)]);
    }

    #[test]
    fn schema_errors_are_input_errors() {
        for bad in [
            "{",
            r#"{"states": 1}"#,
            r#"{"states": 1, "actions": {"x": [[0, 1]], "y": [[0, 1]]}, "payoff": ["x"], "transition": [["1"]], "extra": 1}"#,
            r#"{"states": 2, "actions": {"x": [[0, 1]], "y": [[0, 1]]}, "payoff": ["x"], "transition": [["1"]]}"#,
            r#"{"states": 1, "actions": {"x": [[1, 0]], "y": [[0, 1]]}, "payoff": ["x"], "transition": [["1"]]}"#,
            r#"{"states": 1, "actions": {"x": [[0, 1]], "y": [[0, 1]]}, "payoff": ["w"], "transition": [["1"]]}"#,
        ] {
            let r = GameFile::from_json(bad).and_then(|g| g.to_spec());
            assert!(matches!(r, Err(CliError::Input(_))), "{bad}");
        }
    }

    #[test]
    fn bench_paths() {
        assert_eq!(load_game("bench:exshap").unwrap().spec.states(), 2);
        assert_eq!(load_game("bench:mckinsey").unwrap().spec.states(), 1);
        assert!(matches!(load_game("bench:nope"), Err(CliError::Input(_))));
    }

    #[test]
    fn map_files() {
        let m = MapFile::from_json(r#"{"kind": "linear", "matrix": [[2, 0], [0, 3]]}"#)
            .unwrap()
            .to_map()
            .unwrap();
        assert_eq!(m.dim(), 2);
        let e = MapFile::from_json(r#"{"kind": "explicit", "coordinates": ["f1^2", "f2"]}"#).unwrap();
        assert!(e.to_map().is_ok());
        let bad = MapFile::from_json(r#"{"kind": "minLinear", "sets": [[[0, 0]], [[1, 1]]]}"#).unwrap();
        assert!(matches!(bad.to_map(), Err(CliError::Input(_))));
        assert!(MapFile::from_json(r#"{"kind": "weird"}"#).is_err());
    }
}
