//! Worst-case delay bounds for switched Ethernet trees and the control
//! loops that have to live with them.

pub mod compensators;
pub mod lti;
pub mod netcalc;
pub mod presets;
pub mod sim;
pub mod topology;
