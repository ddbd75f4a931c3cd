#![no_main]

use libfuzzer_sys::fuzz_target;
use wellmirror::io::{self, CsvHeader};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(series) = io::parse_series_csv(text) {
        // unknown true phases are NaN in memory, so compare rendered text
        let header = CsvHeader::new("fuzz", "", 0);
        let written = io::series_csv(&header, &series, 0.0);
        let again = io::parse_series_csv(&written).expect("written series parses");
        assert_eq!(io::series_csv(&header, &again, 0.0), written);
    }
});
