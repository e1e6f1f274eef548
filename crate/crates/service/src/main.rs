use std::env;

use isat_service::{router, Service, ServiceConfig};

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let config = ServiceConfig::from_env()?;
    let addr = env::var("SERVICE_ADDR").unwrap_or_else(|_| "127.0.0.1:8080".into());
    log::info!(
        "listening on {addr}: tick {:?}, {} mode, {} information",
        config.tick_interval,
        config.strategy,
        config.completeness
    );
    let service = Service::tpcc(config);
    let ticker = service.spawn_ticker();
    let listener = tokio::net::TcpListener::bind(&addr).await?;
    axum::serve(listener, router(service))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    ticker.abort();
    Ok(())
}
