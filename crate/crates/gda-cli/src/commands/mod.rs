pub mod audit;
pub mod gen_game;
pub mod pep;
pub mod reproduce;
pub mod run;
pub mod tune;
