pub mod arith;
pub mod construction;
pub mod criterion;
pub mod experiment;
pub mod gaussian;
pub mod qfclassgroup;
pub mod quadfield;
pub mod redei;
pub mod symbols;
