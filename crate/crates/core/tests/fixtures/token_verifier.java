final HttpTransport transport = new NetHttpTransport();
final JsonFactory jsonFactory = new JacksonFactory();
GoogleIdTokenVerifier verifier = new GoogleIdTokenVerifier.Builder(transport, jsonFactory)
   .setAudience(Arrays.asList(clientId))
   .setIssuer("https://accounts.google.com")
   .build();
GoogleIdToken idToken = null;
try {
  idToken = verifier.verify(ID_TOKEN);
} catch (GeneralSecurityException e) {
  e.printStackTrace();
} catch (IOException e) {
  e.printStackTrace();
}
GoogleIdToken.Payload payload = null;
if (idToken != null) {
     payload = idToken.getPayload();
}
String firstName = payload.get("given_name").toString();
String lastName = payload.get("family_name").toString();
