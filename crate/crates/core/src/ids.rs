//! Dense index newtypes. Every id is the position of the object in the
//! collection that owns it, so ordering by id is ordering by input order.

use serde::{Deserialize, Serialize};

macro_rules! dense_id {
    ($(#[$m:meta])* $name:ident) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub struct $name(pub u32);

        impl $name {
            #[inline]
            pub fn index(self) -> usize {
                self.0 as usize
            }

            #[inline]
            pub fn from_index(i: usize) -> Self {
                $name(i as u32)
            }
        }
    };
}

dense_id!(NodeId);
dense_id!(EdgeId);
dense_id!(
    /// Candidate site. "Lowest site id" tie-breaking refers to this index.
    SiteId
);
dense_id!(SubsegmentId);
dense_id!(PathId);
