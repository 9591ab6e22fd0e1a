//! WebSocket transport: one [`Session`] per connection at `/ws`.
//!
//! Text frames carry JSON control messages; the server answers with JSON
//! text and, for drags, a binary update frame. Messages that pile up while
//! a drag is being solved are drained as a batch and coalesced, so only the
//! newest drag of a run gets solved.

use std::net::SocketAddr;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::response::Response;
use axum::routing::get;
use axum::Router;
use futures_util::{SinkExt, StreamExt};
use tokio::net::TcpListener;
use tokio::sync::mpsc;

use crate::protocol::{parse_message, ErrorCode, ServerMessage};
use crate::session::{coalesce, Reply, Session};

pub fn router() -> Router {
    Router::new().route("/ws", get(upgrade))
}

async fn upgrade(ws: WebSocketUpgrade) -> Response {
    ws.max_message_size(64 << 20).on_upgrade(run_connection)
}

/// Serves until the listener fails.
pub async fn serve(listener: TcpListener) -> std::io::Result<()> {
    axum::serve(listener, router()).await
}

pub async fn bind(addr: SocketAddr) -> std::io::Result<TcpListener> {
    TcpListener::bind(addr).await
}

async fn run_connection(socket: WebSocket) {
    let (mut sink, mut stream) = socket.split();
    let (tx, mut rx) = mpsc::unbounded_channel();
    tokio::spawn(async move {
        while let Some(Ok(msg)) = stream.next().await {
            let parsed = match msg {
                Message::Text(text) => parse_message(text.as_str()),
                Message::Binary(_) => Err(ServerMessage::error(ErrorCode::Protocol, "binary control messages are not accepted")),
                Message::Close(_) => break,
                Message::Ping(_) | Message::Pong(_) => continue,
            };
            if tx.send(parsed).is_err() {
                break;
            }
        }
    });

    let mut session = Some(Session::new());
    while let Some(first) = rx.recv().await {
        let mut batch = vec![first];
        while let Ok(next) = rx.try_recv() {
            batch.push(next);
        }
        let batch = coalesce(batch);
        let mut s = session.take().expect("session is returned after every batch");
        let joined = tokio::task::spawn_blocking(move || {
            let mut replies = Vec::new();
            for msg in batch {
                match msg {
                    Ok(m) => replies.extend(s.handle(m)),
                    Err(e) => replies.push(Reply::Text(e)),
                }
            }
            (s, replies)
        })
        .await;
        let Ok((s, replies)) = joined else { return };
        session = Some(s);
        for reply in replies {
            let msg = match reply {
                Reply::Text(m) => Message::Text(m.to_json().into()),
                Reply::Binary(b) => Message::Binary(b.into()),
            };
            if sink.send(msg).await.is_err() {
                return;
            }
        }
    }
}
