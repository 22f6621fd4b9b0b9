//! Serves a matcher over HTTP on a local port and explains a pair through
//! the HTTP client, exactly as a remote model would be explained.
//!
//!     cargo run --example external_matcher

use std::thread;

use em_explain::data::{Record, RecordPair};
use em_explain::explainer::{explain, ExplainerConfig};
use em_explain::matcher::external::HttpMatcher;
use em_explain::matcher::protocol::serve_http;
use em_explain::matcher::{similarity_features, FnMatcher};

fn main() -> em_explain::Result<()> {
    let server = tiny_http::Server::http("127.0.0.1:0").expect("bind a local port");
    let addr = server.server_addr().to_ip().expect("tcp address");
    thread::spawn(move || {
        let matcher = FnMatcher::new(|p: &RecordPair| {
            let f = similarity_features(p);
            f.iter().sum::<f64>() / f.len() as f64
        });
        serve_http(&matcher, server, 1024)
    });

    let client = HttpMatcher::connect(&format!("http://{addr}"))?;
    let a = Record::from_pairs([("title", "sony bravia 46 inch lcd tv"), ("brand", "sony")]);
    let b = Record::from_pairs([("title", "bravia kdl46 lcd television"), ("brand", "sony")]);
    let pair = RecordPair::new("demo", a, b)?;
    let explanation = explain(&client, &pair, &ExplainerConfig::default(), 1)?;
    println!("{}", serde_json::to_string_pretty(&explanation)?);
    Ok(())
}
