pub mod compare;
pub mod gas;
pub mod ledger_demo;
pub mod scale;
pub mod value;
