pub mod atlas;
pub mod cert;
pub mod cli;
pub mod convexjoin;
pub mod error;
pub mod family;
pub mod levi;
pub mod openbook;
pub mod profiles;
