pub mod compare;
pub mod run;
pub mod sweep;
pub mod verify;
