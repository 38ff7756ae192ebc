//! Wallet directory: `credentials/<name>.json` holds one canonical
//! credential per file, `index.json` maps file names to credential ids.
//! Private keys are never written; the caller supplies identities on load.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Wallet, WalletError};
use crate::credentials::VerifiableCredential;
use crate::identity::{sha256, to_canonical, Did, Identity};

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct WalletIndex {
    owner: Did,
    identities: Vec<Did>,
    /// file name -> credential id
    credentials: BTreeMap<String, String>,
}

fn file_name(id: &str) -> String {
    format!("{}.json", &sha256(id.as_bytes()).to_hex()[..32])
}

impl Wallet {
    pub fn save(&self, dir: &Path) -> Result<(), WalletError> {
        let cred_dir = dir.join("credentials");
        if cred_dir.exists() {
            fs::remove_dir_all(&cred_dir)?;
        }
        fs::create_dir_all(&cred_dir)?;
        let mut index = WalletIndex {
            owner: self.owner.did.clone(),
            identities: self.identities.keys().cloned().collect(),
            credentials: BTreeMap::new(),
        };
        for vc in self.credentials.values() {
            let name = file_name(&vc.id);
            fs::write(cred_dir.join(&name), vc.to_canonical_bytes())?;
            index.credentials.insert(name, vc.id.clone());
        }
        let bytes = to_canonical(&index).map_err(|e| WalletError::Corrupt(e.to_string()))?;
        fs::write(dir.join("index.json"), bytes)?;
        Ok(())
    }

    /// Reloads a saved wallet. Every credential file must be canonical and
    /// carry the id the index names for it.
    pub fn load(dir: &Path, owner: Identity, identities: impl IntoIterator<Item = Identity>) -> Result<Self, WalletError> {
        let raw = fs::read(dir.join("index.json"))?;
        let index: WalletIndex = serde_json::from_slice(&raw).map_err(|e| WalletError::Corrupt(e.to_string()))?;
        if index.owner != owner.did {
            return Err(WalletError::OwnerMismatch { expected: owner.did, found: index.owner });
        }
        let mut wallet = Wallet::new(owner);
        for identity in identities {
            wallet.add_identity(identity);
        }
        for (name, id) in &index.credentials {
            let bytes = fs::read(dir.join("credentials").join(name))?;
            let vc: VerifiableCredential =
                serde_json::from_slice(&bytes).map_err(|e| WalletError::Corrupt(format!("{name}: {e}")))?;
            if vc.id != *id || vc.to_canonical_bytes() != bytes || file_name(id) != *name {
                return Err(WalletError::Corrupt(format!("{name} does not hold credential {id} canonically")));
            }
            wallet.insert(vc);
        }
        Ok(wallet)
    }
}
