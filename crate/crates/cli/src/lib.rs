//! Batch front end for `ssm-mirfs`: JSON run configs, CSV data files and
//! JSON report documents.

pub mod commands;
pub mod config;
pub mod io;
pub mod pool;

/// Exit code for a failed run: 3 when the numerics broke down, 2 for
/// anything wrong with the config, data or arguments.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    use ssm_mirfs::Error as E;
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::FilterCollapse { .. }
                | E::NonFiniteDensity { .. }
                | E::SingularInformation { .. }
                | E::BoundaryProximity { .. } => 3,
                _ => 2,
            };
        }
    }
    2
}

#[cfg(test)]
mod tests {
    use super::exit_code;
    use anyhow::Context;
    use ssm_mirfs::Error;

    fn code(e: Error) -> u8 {
        exit_code(&Err::<(), _>(e).context("while running").unwrap_err())
    }

    #[test]
    fn numeric_failures_map_to_3() {
        assert_eq!(code(Error::FilterCollapse { step: 3 }), 3);
        assert_eq!(
            code(Error::NonFiniteDensity {
                step: 1,
                index: 0,
                x: 0.0
            }),
            3
        );
        assert_eq!(
            code(Error::SingularInformation {
                condition: f64::INFINITY
            }),
            3
        );
        assert_eq!(
            code(Error::BoundaryProximity {
                index: 0,
                name: "alpha".into()
            }),
            3
        );
    }

    #[test]
    fn everything_else_maps_to_2() {
        assert_eq!(code(Error::Inadmissible("alpha".into())), 2);
        assert_eq!(code(Error::Unsupported("garch(2,1)".into())), 2);
        assert_eq!(exit_code(&anyhow::anyhow!("no such file")), 2);
    }
}
