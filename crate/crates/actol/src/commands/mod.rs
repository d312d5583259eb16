pub mod gradcheck;
pub mod reward;
pub mod train;
pub mod verify;
