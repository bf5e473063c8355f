use std::fmt;
use std::str::FromStr;

use crate::error::HarnessError;

/// Optimizers the harness knows how to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    AdamW,
    AdamWClip,
    FanosRms,
    Lbfgs,
    RmsProp,
    RmsPropClip,
    SgdMomentum,
}

impl Method {
    /// Rosenbrock sweep line-up, in table order.
    pub const ROSENBROCK: [Method; 7] = [
        Method::AdamW,
        Method::AdamWClip,
        Method::FanosRms,
        Method::Lbfgs,
        Method::RmsProp,
        Method::RmsPropClip,
        Method::SgdMomentum,
    ];

    /// Quadratic diagnostic line-up.
    pub const QUADRATIC: [Method; 5] = [
        Method::AdamW,
        Method::FanosRms,
        Method::Lbfgs,
        Method::RmsProp,
        Method::SgdMomentum,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::AdamW => "AdamW",
            Method::AdamWClip => "AdamW+clip",
            Method::FanosRms => "FANoS-RMS",
            Method::Lbfgs => "LBFGS",
            Method::RmsProp => "RMSProp",
            Method::RmsPropClip => "RMSProp+clip",
            Method::SgdMomentum => "SGD+Mom",
        }
    }

    /// Fixed learning rate used in the quadratic diagnostic.
    pub fn quadratic_lr(self) -> f64 {
        match self {
            Method::SgdMomentum | Method::RmsProp | Method::RmsPropClip | Method::FanosRms => 1e-3,
            Method::AdamW | Method::AdamWClip => 1e-2,
            Method::Lbfgs => 1e-1,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric() || *c == '+')
            .collect::<String>()
            .to_ascii_lowercase();
        Ok(match key.as_str() {
            "adamw" => Method::AdamW,
            "adamw+clip" | "adamwclip" => Method::AdamWClip,
            "fanosrms" | "fanos" => Method::FanosRms,
            "lbfgs" => Method::Lbfgs,
            "rmsprop" => Method::RmsProp,
            "rmsprop+clip" | "rmspropclip" => Method::RmsPropClip,
            "sgd+mom" | "sgdmom" | "sgdmomentum" | "sgd" => Method::SgdMomentum,
            _ => return Err(HarnessError::UnknownMethod(s.to_string())),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for m in Method::ROSENBROCK {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert_eq!("SGD_Mom".parse::<Method>().unwrap(), Method::SgdMomentum);
        assert_eq!("FANoS_RMS".parse::<Method>().unwrap(), Method::FanosRms);
        assert!(matches!(
            "newton".parse::<Method>(),
            Err(HarnessError::UnknownMethod(_))
        ));
    }

    #[test]
    fn quadratic_learning_rates() {
        assert_eq!(Method::SgdMomentum.quadratic_lr(), 1e-3);
        assert_eq!(Method::RmsProp.quadratic_lr(), 1e-3);
        assert_eq!(Method::AdamW.quadratic_lr(), 1e-2);
        assert_eq!(Method::Lbfgs.quadratic_lr(), 1e-1);
        assert_eq!(Method::FanosRms.quadratic_lr(), 1e-3);
    }
}
