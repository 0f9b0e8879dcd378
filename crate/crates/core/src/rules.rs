//! Bundled knowledge bases. Each can be replaced by a file on disk.

pub const DEFAULT_ROLES: &str = include_str!("../rules/roles.json");
pub const DEFAULT_RISK_RULES: &str = include_str!("../rules/risk_rules.json");
pub const DEFAULT_THREAT_RULES: &str = include_str!("../rules/threat_rules.json");

/// File names looked up inside a rules directory override.
pub const ROLES_FILE: &str = "roles.json";
pub const RISK_RULES_FILE: &str = "risk_rules.json";
pub const THREAT_RULES_FILE: &str = "threat_rules.json";
