//! Static role tokens. `Bearer provider` grants the whole panel;
//! `Bearer individual:<subject>` grants one subject's own resources.

use crate::error::ServiceError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Role {
    Provider,
    Individual(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Session {
    pub role: Role,
}

impl Session {
    pub fn provider() -> Self {
        Session { role: Role::Provider }
    }

    pub fn individual(subject: &str) -> Self {
        Session { role: Role::Individual(subject.to_string()) }
    }

    /// Parses an `Authorization` header value.
    pub fn from_header(value: Option<&str>) -> Result<Self, ServiceError> {
        let token = value
            .and_then(|v| v.strip_prefix("Bearer "))
            .map(str::trim)
            .ok_or(ServiceError::Unauthorized)?;
        match token.split_once(':') {
            None if token == "provider" => Ok(Session::provider()),
            Some(("individual", s)) if !s.is_empty() => Ok(Session::individual(s)),
            _ => Err(ServiceError::Unauthorized),
        }
    }

    pub fn token(&self) -> String {
        match &self.role {
            Role::Provider => "provider".into(),
            Role::Individual(s) => format!("individual:{s}"),
        }
    }

    pub fn is_provider(&self) -> bool {
        self.role == Role::Provider
    }

    pub fn check_subject(&self, subject: &str) -> Result<(), ServiceError> {
        match &self.role {
            Role::Provider => Ok(()),
            Role::Individual(s) if s == subject => Ok(()),
            Role::Individual(s) => Err(ServiceError::Forbidden(format!("{s} may not access {subject}"))),
        }
    }

    pub fn require_provider(&self, what: &str) -> Result<(), ServiceError> {
        if self.is_provider() {
            Ok(())
        } else {
            Err(ServiceError::Forbidden(format!("{what} requires the provider role")))
        }
    }
}
