//! Transaction templates: a name, a builder from request parameters to action
//! descriptors, and an optional compensator.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::model::{ActionDescriptor, CompensatingTransaction, Params, Transaction, TxnId};

pub type ActionBuilder =
    Arc<dyn Fn(&Params) -> Result<Vec<ActionDescriptor>, TemplateError> + Send + Sync>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TemplateError {
    #[error("template `{0}` is already registered")]
    Duplicate(String),
    #[error("unknown template `{0}`")]
    Unknown(String),
    #[error("missing parameter `{0}`")]
    MissingParam(String),
    #[error("parameter `{name}` is malformed: {reason}")]
    MalformedParam { name: String, reason: String },
}

#[derive(Clone)]
pub struct Template {
    pub name: String,
    builder: ActionBuilder,
    compensator: Option<ActionBuilder>,
}

impl Template {
    pub fn actions(&self, params: &Params) -> Result<Vec<ActionDescriptor>, TemplateError> {
        (self.builder)(params)
    }

    /// `None` when the template declares that no compensation exists.
    pub fn compensation(
        &self,
        params: &Params,
    ) -> Option<Result<Vec<ActionDescriptor>, TemplateError>> {
        self.compensator.as_ref().map(|c| c(params))
    }

    pub fn has_compensator(&self) -> bool {
        self.compensator.is_some()
    }
}

impl fmt::Debug for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Template")
            .field("name", &self.name)
            .field("compensator", &self.compensator.is_some())
            .finish()
    }
}

/// Write-once-at-startup map of templates.
#[derive(Clone, Debug, Default)]
pub struct TemplateRegistry {
    templates: BTreeMap<String, Template>,
}

impl TemplateRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register<B>(
        &mut self,
        name: &str,
        builder: B,
        compensator: Option<ActionBuilder>,
    ) -> Result<(), TemplateError>
    where
        B: Fn(&Params) -> Result<Vec<ActionDescriptor>, TemplateError> + Send + Sync + 'static,
    {
        if self.templates.contains_key(name) {
            return Err(TemplateError::Duplicate(name.to_string()));
        }
        self.templates.insert(
            name.to_string(),
            Template {
                name: name.to_string(),
                builder: Arc::new(builder),
                compensator,
            },
        );
        Ok(())
    }

    pub fn resolve(&self, name: &str) -> Result<&Template, TemplateError> {
        self.templates
            .get(name)
            .ok_or_else(|| TemplateError::Unknown(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.templates.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.templates.keys().map(String::as_str)
    }

    /// Builds a transaction from a template invocation.
    pub fn instantiate(
        &self,
        id: TxnId,
        template: &str,
        params: Params,
        suspicious: bool,
        arrival_seq: u64,
    ) -> Result<Transaction, TemplateError> {
        let actions = self.resolve(template)?.actions(&params)?;
        Ok(Transaction {
            id,
            template: template.to_string(),
            params,
            actions,
            suspicious,
            arrival_seq,
        })
    }

    /// `None` when the transaction's template has no compensator.
    pub fn compensate(
        &self,
        txn: &Transaction,
    ) -> Result<Option<CompensatingTransaction>, TemplateError> {
        match self.resolve(&txn.template)?.compensation(&txn.params) {
            None => Ok(None),
            Some(actions) => Ok(Some(CompensatingTransaction {
                for_txn: txn.id.clone(),
                actions: actions?,
            })),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ActionKind;

    fn debit(params: &Params) -> Result<Vec<ActionDescriptor>, TemplateError> {
        let row = params
            .get("account")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| TemplateError::MissingParam("account".into()))?;
        Ok(vec![ActionDescriptor::new(
            ActionKind::Decrement,
            "accounts",
            "balance",
            row.to_string(),
        )])
    }

    #[test]
    fn register_and_resolve() {
        let mut reg = TemplateRegistry::new();
        reg.register("payment", debit, None).unwrap();
        assert!(reg.contains("payment"));
        let mut params = Params::new();
        params.insert("account".into(), 3.into());
        let actions = reg.resolve("payment").unwrap().actions(&params).unwrap();
        assert_eq!(actions[0].row, "3".into());
    }

    #[test]
    fn duplicate_names_are_rejected() {
        let mut reg = TemplateRegistry::new();
        reg.register("payment", debit, None).unwrap();
        assert_eq!(
            reg.register("payment", debit, None),
            Err(TemplateError::Duplicate("payment".into()))
        );
    }

    #[test]
    fn missing_compensator_is_reported_as_none() {
        let mut reg = TemplateRegistry::new();
        reg.register("payment", debit, None).unwrap();
        let mut params = Params::new();
        params.insert("account".into(), 1.into());
        let txn = reg
            .instantiate("t1".into(), "payment", params, true, 1)
            .unwrap();
        assert_eq!(reg.compensate(&txn), Ok(None));
        assert!(matches!(
            reg.instantiate("t2".into(), "ghost", Params::new(), false, 2),
            Err(TemplateError::Unknown(_))
        ));
    }
}
