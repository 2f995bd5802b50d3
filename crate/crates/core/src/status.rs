use std::fmt;

/// Outcome of a single check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Pass,
    Fail,
    /// A hypothesis of the checked statement does not hold for this input, so
    /// no claim is made.
    HypothesisUnmet,
    /// The discrete scheme lacks a structural property the statement needs
    /// (e.g. an M-matrix stiffness), so a failure says nothing about the
    /// continuum claim.
    DiscretizationLimited,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::HypothesisUnmet => "hypothesis_unmet",
            Status::DiscretizationLimited => "discretization_limited",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "pass" => Some(Status::Pass),
            "fail" => Some(Status::Fail),
            "hypothesis_unmet" => Some(Status::HypothesisUnmet),
            "discretization_limited" => Some(Status::DiscretizationLimited),
            _ => None,
        }
    }

    /// Whether the status should let a run succeed.
    pub fn is_ok(self) -> bool {
        self != Status::Fail
    }

    pub fn from_bool(pass: bool) -> Self {
        if pass {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
