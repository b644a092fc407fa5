/** Payload shapes of the assistant service API (the single source of
 * truth for every number the console displays). */
export {};
