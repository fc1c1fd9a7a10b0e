use std::path::Path;

use super::{GridCase, GridError, Result};

const CASE14: &str = include_str!("../../cases/case14.toml");
const CASE30: &str = include_str!("../../cases/case30.toml");
const CASE57: &str = include_str!("../../cases/case57.toml");

/// Parse and validate a case document (TOML with `bus`, `branch`,
/// `generator`, `load` and optional `switch` arrays).
pub fn load_case(text: &str) -> Result<GridCase> {
    let case: GridCase = toml::from_str(text).map_err(|e| {
        let (line, column) = e
            .span()
            .map(|span| line_col(text, span.start))
            .unwrap_or((0, 0));
        GridError::Parse {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    case.validate()?;
    Ok(case)
}

pub fn load_case_file(path: impl AsRef<Path>) -> Result<GridCase> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| GridError::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_case(&text)
}

pub fn serialize_case(case: &GridCase) -> String {
    toml::to_string(case).expect("case values are always representable")
}

pub fn bundled_case_names() -> &'static [&'static str] {
    &["case14", "case30", "case57"]
}

pub fn bundled_case(name: &str) -> Result<GridCase> {
    let text = match name {
        "case14" => CASE14,
        "case30" => CASE30,
        "case57" => CASE57,
        other => return Err(GridError::UnknownFixture(other.to_string())),
    };
    load_case(text)
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let prefix = &text[..offset.min(text.len())];
    let line = prefix.matches('\n').count() + 1;
    let column = prefix.rfind('\n').map_or(prefix.len(), |p| prefix.len() - p - 1) + 1;
    (line, column)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{BusKind, SwitchState};
    use crate::testutil::TWO_BUS;


    #[test]
    fn minimal_two_bus() {
        let case = load_case(TWO_BUS).unwrap();
        assert_eq!(case.buses.len(), 2);
        assert_eq!(case.branches.len(), 1);
        assert_eq!(case.buses[0].kind, BusKind::Slack);
        assert_eq!(case.branches[0].status, SwitchState::Closed);
    }

    #[test]
    fn bundled_fixtures_load() {
        assert_eq!(bundled_case("case14").unwrap().buses.len(), 14);
        assert_eq!(bundled_case("case30").unwrap().buses.len(), 30);
        assert_eq!(bundled_case("case57").unwrap().buses.len(), 57);
        assert!(matches!(bundled_case("case9999"), Err(GridError::UnknownFixture(_))));
    }

    #[test]
    fn unknown_bus_is_rejected() {
        let text = TWO_BUS.replace("from_bus = 1, to_bus = 2", "from_bus = 1, to_bus = 99");
        let err = load_case(&text).unwrap_err();
        assert!(matches!(err, GridError::Validation(_)));
        assert!(err.to_string().contains("unknown bus"), "{err}");
    }

    #[test]
    fn parse_error_reports_location() {
        let text = TWO_BUS.replace("x = 0.1,", "x = \"abc\",");
        match load_case(&text).unwrap_err() {
            GridError::Parse { line, column, .. } => {
                assert_eq!(line, 8);
                assert!(column > 1);
            }
            other => panic!("expected parse error, got {other}"),
        }
        let missing = TWO_BUS.replace("r = 0.0, x = 0.1, ", "");
        let err = load_case(&missing).unwrap_err();
        assert!(err.to_string().contains('r') && matches!(err, GridError::Parse { .. }));
    }

    #[test]
    fn invariant_violations() {
        let cases = [
            (TWO_BUS.replace("r = 0.0, x = 0.1", "r = 0.0, x = 0.0"), "zero impedance"),
            (TWO_BUS.replace("tap = 1.0", "tap = 0.0"), "tap"),
            (TWO_BUS.replacen("v_min = 0.9, v_max = 1.1", "v_min = 1.1, v_max = 0.9", 1), "v_min"),
            (TWO_BUS.replace("kind = \"pq\"", "kind = \"slack\""), "slack"),
            (TWO_BUS.replace("kind = \"slack\"", "kind = \"pv\""), "slack"),
            (TWO_BUS.replace("p_min = 0.0, p_max = 2.0", "p_min = 3.0, p_max = 2.0"), "limits"),
        ];
        for (text, needle) in cases {
            let err = load_case(&text).unwrap_err();
            assert!(err.to_string().contains(needle), "{needle}: {err}");
        }
    }

    #[test]
    fn fixture_round_trip() {
        for name in bundled_case_names() {
            let case = bundled_case(name).unwrap();
            let again = load_case(&serialize_case(&case)).unwrap();
            assert_eq!(case, again);
        }
    }
}
