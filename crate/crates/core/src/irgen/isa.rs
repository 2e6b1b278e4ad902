//! Target descriptions for the kernel generator.
//!
//! An [`IsaDescriptor`] is a declarative record of one vector target:
//! lane count, element type, the C element type and headers to emit,
//! whether the four-lane dword blend exists, per-instruction cost data
//! (latency and throughput), and the load/store macro text spliced into
//! generated kernels. Descriptors load from a strict JSON format and one
//! descriptor, [`builtin`] (`"sse4x32m"`), ships in the binary.

use super::ty::{IrType, ScalarType};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Every mnemonic the unparser can emit. Descriptor validation requires
/// cost data for each of these (the blend row only on targets that have
/// the instruction), so strategy selection never reads a missing row.
pub const EMISSION_MNEMONICS: [&str; 17] = [
    "_mm_mul_epu32",
    "_mm_mullo_epi32",
    "_mm_shuffle_epi32",
    "_mm_shuffle_ps",
    "_mm_unpacklo_epi32",
    "_mm_unpackhi_epi32",
    "_mm_blend_epi32",
    "_mm_and_si128",
    "_mm_add_epi64",
    "_mm_add_epi32",
    "_mm_sub_epi32",
    "_mm_cmpgt_epi32",
    "_mm_slli_epi32",
    "_mm_srli_epi32",
    "_mm_slli_epi64",
    "_mm_srli_epi64",
    "_mm_srli_si128",
];

const BLEND_MNEMONIC: &str = "_mm_blend_epi32";

/// Cost data for one instruction. `throughput` is the sustained
/// instructions-per-cycle figure as published; the selection cost of one
/// use is its reciprocal, [`CostEntry::cost`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostEntry {
    pub mnemonic: String,
    pub latency: f64,
    pub throughput: f64,
    pub arch: String,
}

impl CostEntry {
    pub fn cost(&self) -> f64 {
        1.0 / self.throughput
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsaDescriptor {
    pub name: String,
    pub info: String,
    /// Lane count of the vector register.
    pub v: u32,
    /// Element type name; currently only "TModInt" is meaningful.
    pub element_type: String,
    /// C element type emitted in kernel signatures.
    pub ctype: String,
    /// Headers emitted ahead of the intrinsic header.
    pub includes: Vec<String>,
    /// Whether `_mm_blend_epi32` (AVX2) is available.
    pub has_blend: bool,
    pub cost_table: Vec<CostEntry>,
    /// Emission template for the load macro, spliced verbatim.
    pub svload_init: String,
    /// Emission template for the store macro, spliced verbatim.
    pub svstore_init: String,
}

#[derive(Debug, Error)]
pub enum IsaError {
    #[error("descriptor does not parse: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("lane count {0} is below the 2-lane minimum")]
    LaneCount(u32),
    #[error("element type `{0}` is not supported (expected \"TModInt\")")]
    ElementType(String),
    #[error("cost table has no entry for `{mnemonic}` (required by the emitter)")]
    MissingCost { mnemonic: String },
    #[error("cost table entry for `{mnemonic}` has non-positive throughput {throughput}")]
    BadThroughput { mnemonic: String, throughput: f64 },
    #[error("cost table lists `{0}` more than once")]
    DuplicateCost(String),
}

impl IsaDescriptor {
    /// The register type: a `v`-lane vector of the element type.
    pub fn register_type(&self) -> IrType {
        IrType::Vect(self.element_scalar(), self.v)
    }

    fn element_scalar(&self) -> ScalarType {
        ScalarType::from_name(&self.element_type).unwrap_or(ScalarType::ModInt)
    }

    pub fn cost_entry(&self, mnemonic: &str) -> Option<&CostEntry> {
        self.cost_table.iter().find(|e| e.mnemonic == mnemonic)
    }

    /// Structural checks beyond what the JSON schema enforces. The
    /// register type is derived from `element_type` and `v`, so its
    /// width always matches the lane count by construction.
    pub fn validate(&self) -> Result<(), IsaError> {
        if self.v < 2 {
            return Err(IsaError::LaneCount(self.v));
        }
        if ScalarType::from_name(&self.element_type) != Some(ScalarType::ModInt) {
            return Err(IsaError::ElementType(self.element_type.clone()));
        }
        for entry in &self.cost_table {
            if entry.throughput <= 0.0 {
                return Err(IsaError::BadThroughput {
                    mnemonic: entry.mnemonic.clone(),
                    throughput: entry.throughput,
                });
            }
            if self
                .cost_table
                .iter()
                .filter(|e| e.mnemonic == entry.mnemonic)
                .count()
                > 1
            {
                return Err(IsaError::DuplicateCost(entry.mnemonic.clone()));
            }
        }
        for mnemonic in EMISSION_MNEMONICS {
            if mnemonic == BLEND_MNEMONIC && !self.has_blend {
                continue;
            }
            if self.cost_entry(mnemonic).is_none() {
                return Err(IsaError::MissingCost {
                    mnemonic: mnemonic.to_string(),
                });
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("descriptor serializes")
    }
}

/// Parses and validates a descriptor from its JSON text. Unknown keys
/// are rejected.
pub fn load_isa(config_text: &str) -> Result<IsaDescriptor, IsaError> {
    let descriptor: IsaDescriptor = serde_json::from_str(config_text)?;
    descriptor.validate()?;
    Ok(descriptor)
}

/// The built-in descriptor: a 4-way 32-bit modular-integer view of
/// SSE4-class hardware. Costs are the published pre-Haswell figures for
/// the shuffle/unpack family (float shuffle sustains 1 per cycle,
/// integer shuffles and unpacks 2 per cycle) with the blend listed at
/// its native 3-per-cycle figure.
pub fn builtin() -> IsaDescriptor {
    let entry = |mnemonic: &str, latency: f64, throughput: f64, arch: &str| CostEntry {
        mnemonic: mnemonic.to_string(),
        latency,
        throughput,
        arch: arch.to_string(),
    };
    IsaDescriptor {
        name: "sse4x32m".to_string(),
        info: "SSE 4-way 32-bit modular integer ISA".to_string(),
        v: 4,
        element_type: "TModInt".to_string(),
        ctype: "int32_t".to_string(),
        includes: vec!["stdint.h".to_string(), "stddef.h".to_string()],
        has_blend: true,
        cost_table: vec![
            entry("_mm_mul_epu32", 3.0, 1.0, "nehalem"),
            entry("_mm_mullo_epi32", 5.0, 1.0, "nehalem sse4.1"),
            entry("_mm_shuffle_epi32", 1.0, 0.5, "nehalem"),
            entry("_mm_shuffle_ps", 1.0, 1.0, "nehalem"),
            entry("_mm_unpacklo_epi32", 1.0, 0.5, "nehalem"),
            entry("_mm_unpackhi_epi32", 1.0, 0.5, "nehalem"),
            entry("_mm_blend_epi32", 1.0, 0.33, "haswell avx2"),
            entry("_mm_and_si128", 1.0, 0.33, "nehalem"),
            entry("_mm_add_epi64", 1.0, 0.5, "nehalem"),
            entry("_mm_add_epi32", 1.0, 0.5, "nehalem"),
            entry("_mm_sub_epi32", 1.0, 0.5, "nehalem"),
            entry("_mm_cmpgt_epi32", 1.0, 0.5, "nehalem"),
            entry("_mm_slli_epi32", 1.0, 1.0, "nehalem"),
            entry("_mm_srli_epi32", 1.0, 1.0, "nehalem"),
            entry("_mm_slli_epi64", 1.0, 1.0, "nehalem"),
            entry("_mm_srli_epi64", 1.0, 1.0, "nehalem"),
            entry("_mm_srli_si128", 1.0, 1.0, "nehalem"),
        ],
        svload_init: "#define SV_LOAD(p) _mm_load_si128((const __m128i *)(p))".to_string(),
        svstore_init: "#define SV_STORE(p, x) _mm_store_si128((__m128i *)(p), (x))".to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_is_valid_and_shaped_as_documented() {
        let isa = builtin();
        isa.validate().unwrap();
        assert_eq!(isa.name, "sse4x32m");
        assert_eq!(isa.v, 4);
        assert_eq!(isa.ctype, "int32_t");
        assert!(isa.includes.iter().any(|h| h == "stdint.h"));
        assert!(isa.has_blend);
        assert_eq!(
            isa.register_type(),
            IrType::Vect(ScalarType::ModInt, 4)
        );
    }

    #[test]
    fn builtin_round_trips_through_json() {
        let isa = builtin();
        let loaded = load_isa(&isa.to_json()).unwrap();
        assert_eq!(loaded, isa);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut value: serde_json::Value = serde_json::from_str(&builtin().to_json()).unwrap();
        value["surprise"] = serde_json::json!(1);
        assert!(matches!(
            load_isa(&value.to_string()),
            Err(IsaError::Parse(_))
        ));
    }

    #[test]
    fn missing_cost_entry_is_rejected() {
        let mut isa = builtin();
        isa.cost_table.retain(|e| e.mnemonic != "_mm_mullo_epi32");
        assert!(matches!(
            load_isa(&isa.to_json()),
            Err(IsaError::MissingCost { mnemonic }) if mnemonic == "_mm_mullo_epi32"
        ));
    }

    #[test]
    fn blend_cost_not_required_without_blend() {
        let mut isa = builtin();
        isa.has_blend = false;
        isa.cost_table.retain(|e| e.mnemonic != "_mm_blend_epi32");
        load_isa(&isa.to_json()).unwrap();
    }

    #[test]
    fn lane_count_and_element_type_are_checked() {
        let mut isa = builtin();
        isa.v = 1;
        assert!(matches!(isa.validate(), Err(IsaError::LaneCount(1))));

        let mut isa = builtin();
        isa.element_type = "TReal".to_string();
        assert!(matches!(isa.validate(), Err(IsaError::ElementType(_))));
    }

    #[test]
    fn throughput_must_be_positive() {
        let mut isa = builtin();
        isa.cost_table[0].throughput = 0.0;
        assert!(matches!(
            isa.validate(),
            Err(IsaError::BadThroughput { .. })
        ));
    }

    #[test]
    fn duplicate_cost_rows_are_rejected() {
        let mut isa = builtin();
        let dup = isa.cost_table[0].clone();
        isa.cost_table.push(dup);
        assert!(matches!(isa.validate(), Err(IsaError::DuplicateCost(_))));
    }

    #[test]
    fn reciprocal_throughput_is_the_selection_cost() {
        let isa = builtin();
        let shuffle = isa.cost_entry("_mm_shuffle_epi32").unwrap();
        assert_eq!(shuffle.cost(), 2.0);
        let float_shuffle = isa.cost_entry("_mm_shuffle_ps").unwrap();
        assert_eq!(float_shuffle.cost(), 1.0);
        // The raw throughput figure survives a serialize/parse cycle
        // exactly, so selection arithmetic is stable across loads.
        let reloaded = load_isa(&isa.to_json()).unwrap();
        assert_eq!(
            reloaded.cost_entry("_mm_blend_epi32").unwrap().throughput,
            0.33
        );
    }
}
