#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(config) = manetsim::SimulationConfig::parse(text) {
            // Anything that parses must satisfy the invariants and survive
            // a serialize/parse round trip unchanged.
            config.validate().unwrap();
            let again = manetsim::SimulationConfig::parse(&config.to_parameter_file()).unwrap();
            assert_eq!(again, config);
        }
    }
});
