//! Digital product passports on decentralized identity.
//!
//! Two ownership designs share one simulated registry:
//!
//! * **DID per product**: each item has a DID document whose controller is
//!   the current owner; lifecycle events are anchored as credential digests.
//! * **Credentials per product**: items are addressed by GTIN + serial only;
//!   ownership is a chain of transfer credentials, each embedding its
//!   predecessor, with the seller revoking its own link on every sale.

pub mod identity;
pub mod vdr;
pub mod credentials;
pub mod wallet;
pub mod dpp;
pub mod lifecycle;
pub mod costmodel;
