pub mod codec;
pub mod crs;
pub mod deployment;
pub mod frame;
pub mod group;
pub mod hsm;
pub mod simnet;
pub mod transient;
pub mod vehicle;

/// Book chapters, compiled here so their snippets run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/groups.md")]
    mod groups {}
    #[doc = include_str!("../../../book/src/identity-keys.md")]
    mod identity_keys {}
    #[doc = include_str!("../../../book/src/ring-signatures.md")]
    mod ring_signatures {}
    #[doc = include_str!("../../../book/src/pseudonyms.md")]
    mod pseudonyms {}
    #[doc = include_str!("../../../book/src/vehicles.md")]
    mod vehicles {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
}
