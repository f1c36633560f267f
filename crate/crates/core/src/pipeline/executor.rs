use std::sync::mpsc::{self, Receiver, Sender};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};

type Job = Box<dyn FnOnce() + Send + 'static>;

/// Fixed pool of threads that run submitted I/O jobs; stands in for the
/// kernel's asynchronous completion machinery.
pub(crate) struct IoExecutor {
    tx: Option<Sender<Job>>,
    workers: Vec<JoinHandle<()>>,
}

/// Cloneable submission side of an [`IoExecutor`], usable from inside jobs.
#[derive(Clone)]
pub(crate) struct Submitter {
    tx: Sender<Job>,
}

impl Submitter {
    pub(crate) fn submit(&self, job: impl FnOnce() + Send + 'static) {
        // Workers only exit after every sender is gone, so this cannot fail
        // while a Submitter is alive.
        let _ = self.tx.send(Box::new(job));
    }
}

impl IoExecutor {
    pub(crate) fn new(threads: usize) -> Self {
        let (tx, rx) = mpsc::channel::<Job>();
        let rx: Arc<Mutex<Receiver<Job>>> = Arc::new(Mutex::new(rx));
        let workers = (0..threads.max(1))
            .map(|i| {
                let rx = Arc::clone(&rx);
                thread::Builder::new()
                    .name(format!("seqio-io-{i}"))
                    .spawn(move || loop {
                        let job = match rx.lock().unwrap().recv() {
                            Ok(job) => job,
                            Err(_) => break,
                        };
                        job();
                    })
                    .expect("spawn I/O worker")
            })
            .collect();
        IoExecutor {
            tx: Some(tx),
            workers,
        }
    }

    pub(crate) fn submitter(&self) -> Submitter {
        Submitter {
            tx: self.tx.as_ref().expect("executor shut down").clone(),
        }
    }
}

impl Drop for IoExecutor {
    fn drop(&mut self) {
        self.tx.take();
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
    }
}
