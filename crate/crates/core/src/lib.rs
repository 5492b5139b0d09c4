pub mod jet;
pub mod family;
pub mod verify;
pub mod immersion;
pub mod pde;
pub mod frame;
